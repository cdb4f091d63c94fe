#include "json_util.h"

#include <fstream>
#include <sstream>

namespace partmatch::detail {

namespace {

[[noreturn]] void schema_error(std::string_view context, std::string_view key,
                               std::string_view what) {
  throw Error(ErrorCode::kSchema,
              std::string(context) + ": field '" + std::string(key) + "' " + std::string(what));
}

}  // namespace

const nlohmann::json& require(const nlohmann::json& j, std::string_view key,
                              std::string_view context) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kSchema, std::string(context) + ": expected an object");
  }
  const auto it = j.find(key);
  if (it == j.end()) schema_error(context, key, "is missing");
  return *it;
}

double require_number(const nlohmann::json& j, std::string_view key, std::string_view context) {
  const auto& v = require(j, key, context);
  if (!v.is_number()) schema_error(context, key, "must be a number");
  return v.get<double>();
}

int require_int(const nlohmann::json& j, std::string_view key, std::string_view context) {
  const auto& v = require(j, key, context);
  if (!v.is_number_integer()) schema_error(context, key, "must be an integer");
  return v.get<int>();
}

std::string require_string(const nlohmann::json& j, std::string_view key,
                           std::string_view context) {
  const auto& v = require(j, key, context);
  if (!v.is_string()) schema_error(context, key, "must be a string");
  return v.get<std::string>();
}

const nlohmann::json& require_array(const nlohmann::json& j, std::string_view key,
                                    std::string_view context, std::size_t exact_size) {
  const auto& v = require(j, key, context);
  if (!v.is_array()) schema_error(context, key, "must be an array");
  if (exact_size != 0 && v.size() != exact_size) {
    schema_error(context, key, "must have " + std::to_string(exact_size) + " elements");
  }
  return v;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename into " + path.string() + ": " + ec.message());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace partmatch::detail
