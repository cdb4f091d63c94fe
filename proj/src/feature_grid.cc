#include "partmatch/feature_grid.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "json_util.h"
#include "partmatch/error.h"

namespace partmatch {
namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 4 * 5 + 4;
// Upper bound on rows * cols * dim accepted by the reader (4 GiB of floats).
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 30;

void check_dims(int rows, int cols, int dim, float stride) {
  if (rows <= 0 || cols <= 0 || dim <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "grid dimensions must be positive");
  }
  const std::uint64_t n =
      static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) * static_cast<std::uint64_t>(dim);
  if (n > kMaxElements) throw Error(ErrorCode::kDimensionOverflow, "grid too large");
  if (!(stride >= 1.0f)) throw Error(ErrorCode::kInvalidArgument, "grid stride must be >= 1");
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= std::uint32_t{in[offset + b]} << (8 * b);
  return v;
}

}  // namespace

FeatureGrid::FeatureGrid(int rows, int cols, int dim, float stride, GridMeta meta)
    : rows_(rows), cols_(cols), dim_(dim), stride_(stride), meta_(std::move(meta)) {
  check_dims(rows, cols, dim, stride);
  data_.assign(static_cast<std::size_t>(rows) * cols * dim, 0.0f);
}

FeatureGrid::FeatureGrid(int rows, int cols, int dim, float stride, std::vector<float> data,
                         GridMeta meta)
    : rows_(rows), cols_(cols), dim_(dim), stride_(stride), data_(std::move(data)),
      meta_(std::move(meta)) {
  check_dims(rows, cols, dim, stride);
  if (data_.size() != static_cast<std::size_t>(rows) * cols * dim) {
    throw Error(ErrorCode::kInvalidArgument, "grid data length does not match rows*cols*dim");
  }
}

int FeatureGrid::index_of(int row, int col) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "cell (" + std::to_string(row) + "," + std::to_string(col) + ") outside " +
                    std::to_string(rows_) + "x" + std::to_string(cols_) + " grid");
  }
  return row * cols_ + col;
}

CellIndex FeatureGrid::cell_of(int index) const {
  if (index < 0 || index >= num_cells()) {
    throw Error(ErrorCode::kIndexOutOfRange, "cell index " + std::to_string(index));
  }
  return {index / cols_, index % cols_};
}

std::span<const float> FeatureGrid::cell(int index) const {
  cell_of(index);
  return std::span<const float>(data_).subspan(static_cast<std::size_t>(index) * dim_,
                                               static_cast<std::size_t>(dim_));
}

std::span<float> FeatureGrid::cell(int index) {
  cell_of(index);
  return std::span<float>(data_).subspan(static_cast<std::size_t>(index) * dim_,
                                         static_cast<std::size_t>(dim_));
}

Vec2 FeatureGrid::cell_center(int row, int col) const {
  index_of(row, col);
  const double s = stride_;
  return {s * col + 0.5 * s, s * row + 0.5 * s};
}

Vec2 FeatureGrid::cell_center(int index) const {
  const CellIndex c = cell_of(index);
  return cell_center(c.row, c.col);
}

std::optional<int> FeatureGrid::cell_at_pixel(const Vec2& pixel) const {
  const double col = std::floor(pixel.x() / stride_);
  const double row = std::floor(pixel.y() / stride_);
  if (col < 0 || row < 0 || col >= cols_ || row >= rows_) return std::nullopt;
  return static_cast<int>(row) * cols_ + static_cast<int>(col);
}

bool FeatureGrid::is_dead(int index) const {
  for (float v : cell(index)) {
    if (v != 0.0f) return false;
  }
  return true;
}

Vec2 cell_center(int row, int col, const FeatureGrid& grid) { return grid.cell_center(row, col); }

NormalizeResult normalize(const FeatureGrid& grid) {
  NormalizeResult result{grid, {}};
  FeatureGrid& g = result.grid;
  for (int c = 0; c < g.num_cells(); ++c) {
    auto v = g.cell(c);
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    const double norm = std::sqrt(sq);
    if (norm == 0.0) {
      result.dead_cells.push_back(c);
      continue;
    }
    if (std::abs(norm - 1.0) <= 1e-6) continue;
    for (float& x : v) x = static_cast<float>(x / norm);
  }
  return result;
}

nlohmann::json meta_to_json(const GridMeta& meta) {
  nlohmann::json j = {{"image_id", meta.image_id}, {"width", meta.width}, {"height", meta.height}};
  if (meta.viewpoint) {
    j["viewpoint"] = {{"azimuth", meta.viewpoint->azimuth},
                      {"elevation", meta.viewpoint->elevation},
                      {"distance", meta.viewpoint->distance},
                      {"focal", meta.viewpoint->focal}};
  }
  return j;
}

GridMeta meta_from_json(const nlohmann::json& j) {
  constexpr std::string_view ctx = "grid metadata";
  GridMeta meta;
  meta.image_id = detail::require_string(j, "image_id", ctx);
  meta.width = detail::require_int(j, "width", ctx);
  meta.height = detail::require_int(j, "height", ctx);
  if (j.contains("viewpoint")) {
    const auto& vj = j.at("viewpoint");
    constexpr std::string_view vctx = "grid metadata viewpoint";
    Viewpoint vp;
    vp.azimuth = detail::require_number(vj, "azimuth", vctx);
    vp.elevation = detail::require_number(vj, "elevation", vctx);
    vp.distance = detail::require_number(vj, "distance", vctx);
    vp.focal = detail::require_number(vj, "focal", vctx);
    vp.width = meta.width;
    vp.height = meta.height;
    meta.viewpoint = vp;
  }
  return meta;
}

std::vector<std::uint8_t> encode_grid(const FeatureGrid& grid) {
  const std::string meta = meta_to_json(grid.meta()).dump();
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + meta.size() + grid.data().size() * 4);
  for (char c : std::string_view("FGRD")) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(grid.rows()));
  put_u32(out, static_cast<std::uint32_t>(grid.cols()));
  put_u32(out, static_cast<std::uint32_t>(grid.dim()));
  put_u32(out, std::bit_cast<std::uint32_t>(grid.stride()));
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.insert(out.end(), meta.begin(), meta.end());
  for (float v : grid.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FeatureGrid decode_grid(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "FGRD", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "not an FGRD file (bad magic)");
  }
  if (bytes.size() < kHeaderSize) throw Error(ErrorCode::kTruncated, "FGRD header truncated");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kVersion) {
    throw Error(ErrorCode::kUnsupportedVersion, "FGRD version " + std::to_string(version));
  }
  const std::uint64_t rows = get_u32(bytes, 8);
  const std::uint64_t cols = get_u32(bytes, 12);
  const std::uint64_t dim = get_u32(bytes, 16);
  const float stride = std::bit_cast<float>(get_u32(bytes, 20));
  const std::uint64_t meta_len = get_u32(bytes, 24);
  if (rows == 0 || cols == 0 || dim == 0 || rows > kMaxElements || cols > kMaxElements ||
      dim > kMaxElements || rows * cols > kMaxElements || rows * cols * dim > kMaxElements) {
    throw Error(ErrorCode::kDimensionOverflow,
                "FGRD dimensions " + std::to_string(rows) + "x" + std::to_string(cols) + "x" +
                    std::to_string(dim) + " out of range");
  }
  if (!(stride >= 1.0f)) throw Error(ErrorCode::kSchema, "FGRD stride must be >= 1");
  if (bytes.size() - kHeaderSize < meta_len) {
    throw Error(ErrorCode::kTruncated, "FGRD metadata truncated");
  }
  const std::string meta_text(reinterpret_cast<const char*>(bytes.data() + kHeaderSize),
                              static_cast<std::size_t>(meta_len));
  nlohmann::json meta_json;
  try {
    meta_json = nlohmann::json::parse(meta_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("FGRD metadata: ") + e.what());
  }
  GridMeta meta = meta_from_json(meta_json);

  const std::uint64_t n = rows * cols * dim;
  const std::size_t payload_offset = kHeaderSize + static_cast<std::size_t>(meta_len);
  const std::size_t payload = bytes.size() - payload_offset;
  if (payload < n * 4) {
    throw Error(ErrorCode::kTruncated, "FGRD payload truncated: expected " +
                                           std::to_string(n * 4) + " bytes, found " +
                                           std::to_string(payload));
  }
  if (payload > n * 4) throw Error(ErrorCode::kSchema, "FGRD has trailing bytes");
  std::vector<float> data(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, payload_offset + 4 * i));
  }
  return FeatureGrid(static_cast<int>(rows), static_cast<int>(cols), static_cast<int>(dim),
                     stride, std::move(data), std::move(meta));
}

void write_grid(const FeatureGrid& grid, const std::filesystem::path& path) {
  const auto bytes = encode_grid(grid);
  detail::write_text_atomic(
      path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

FeatureGrid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open grid file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return decode_grid(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

nlohmann::json annotations_to_json(std::span<const PartAnnotation> annotations) {
  nlohmann::json out = nlohmann::json::array();
  for (const PartAnnotation& a : annotations) {
    out.push_back({{"part_id", a.part_id},
                   {"box", {a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max}}});
  }
  return out;
}

std::vector<PartAnnotation> annotations_from_json(const nlohmann::json& j, int num_parts) {
  if (!j.is_array()) throw Error(ErrorCode::kSchema, "annotations: expected an array");
  std::vector<PartAnnotation> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = "annotation " + std::to_string(i);
    PartAnnotation a;
    a.part_id = detail::require_int(j[i], "part_id", ctx);
    const auto& box = detail::require_array(j[i], "box", ctx, 4);
    for (const auto& v : box) {
      if (!v.is_number()) throw Error(ErrorCode::kSchema, ctx + ": field 'box' must hold numbers");
    }
    a.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
             box[3].get<double>()};
    if (!a.box.well_formed()) throw Error(ErrorCode::kSchema, ctx + ": field 'box' is inverted");
    if (a.part_id < 0 || (num_parts > 0 && a.part_id >= num_parts)) {
      throw Error(ErrorCode::kSchema, ctx + ": field 'part_id' outside the part catalog");
    }
    out.push_back(a);
  }
  return out;
}

void write_annotations(std::span<const PartAnnotation> annotations,
                       const std::filesystem::path& path) {
  detail::write_json_file(path, annotations_to_json(annotations));
}

std::vector<PartAnnotation> read_annotations(const std::filesystem::path& path, int num_parts) {
  return detail::parse_json_file(
      path, [&](const nlohmann::json& j) { return annotations_from_json(j, num_parts); });
}

}  // namespace partmatch
