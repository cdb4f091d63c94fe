#pragma once

// Internal helpers for schema-checked JSON reading and atomic file output.

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "partmatch/error.h"

namespace partmatch::detail {

const nlohmann::json& require(const nlohmann::json& j, std::string_view key,
                              std::string_view context);

double require_number(const nlohmann::json& j, std::string_view key, std::string_view context);
int require_int(const nlohmann::json& j, std::string_view key, std::string_view context);
std::string require_string(const nlohmann::json& j, std::string_view key,
                           std::string_view context);
const nlohmann::json& require_array(const nlohmann::json& j, std::string_view key,
                                    std::string_view context, std::size_t exact_size = 0);

nlohmann::json read_json_file(const std::filesystem::path& path);

// Parses path with fn, prefixing any schema error with the path.
template <class Fn>
auto parse_json_file(const std::filesystem::path& path, Fn&& fn) {
  const nlohmann::json j = read_json_file(path);
  try {
    return fn(j);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

// Writes to a sibling temporary and renames over the destination.
void write_text_atomic(const std::filesystem::path& path, std::string_view text);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace partmatch::detail
