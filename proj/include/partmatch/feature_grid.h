#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "partmatch/box.h"
#include "partmatch/geometry3d.h"

namespace partmatch {

struct GridMeta {
  std::string image_id;
  int width = 0;   // image size in pixels
  int height = 0;
  // Ground-truth or rendering viewpoint; its width/height mirror the fields above.
  std::optional<Viewpoint> viewpoint;

  friend bool operator==(const GridMeta&, const GridMeta&) = default;
};

struct CellIndex {
  int row = 0;
  int col = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

// rows x cols lattice of dim-length descriptors, row-major with the
// descriptor dimension fastest. Cell (i, j) sits at pixel
// (stride * j + stride / 2, stride * i + stride / 2).
class FeatureGrid {
 public:
  FeatureGrid(int rows, int cols, int dim, float stride, GridMeta meta = {});
  FeatureGrid(int rows, int cols, int dim, float stride, std::vector<float> data,
              GridMeta meta = {});

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int dim() const { return dim_; }
  float stride() const { return stride_; }
  int num_cells() const { return rows_ * cols_; }
  const GridMeta& meta() const { return meta_; }
  GridMeta& mutable_meta() { return meta_; }
  const std::vector<float>& data() const { return data_; }

  int index_of(int row, int col) const;
  CellIndex cell_of(int index) const;

  std::span<const float> cell(int index) const;
  std::span<float> cell(int index);
  std::span<const float> cell(int row, int col) const { return cell(index_of(row, col)); }
  std::span<float> cell(int row, int col) { return cell(index_of(row, col)); }

  Vec2 cell_center(int row, int col) const;
  Vec2 cell_center(int index) const;
  // Cell whose footprint contains the pixel, if any.
  std::optional<int> cell_at_pixel(const Vec2& pixel) const;

  // All components exactly zero.
  bool is_dead(int index) const;

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  int rows_;
  int cols_;
  int dim_;
  float stride_;
  std::vector<float> data_;
  GridMeta meta_;
};

Vec2 cell_center(int row, int col, const FeatureGrid& grid);

struct NormalizeResult {
  FeatureGrid grid;
  std::vector<int> dead_cells;  // all-zero cells, left as zero
};

// L2-normalizes every cell. Cells already within 1e-6 of unit norm are left
// untouched, which makes the operation exactly idempotent.
NormalizeResult normalize(const FeatureGrid& grid);

// FGRD binary format, version 1 (little-endian):
//   "FGRD" u32 version u32 rows u32 cols u32 dim f32 stride u32 meta_len
//   meta_len bytes of UTF-8 JSON, then rows*cols*dim f32.
void write_grid(const FeatureGrid& grid, const std::filesystem::path& path);
FeatureGrid read_grid(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_grid(const FeatureGrid& grid);
FeatureGrid decode_grid(std::span<const std::uint8_t> bytes);

nlohmann::json meta_to_json(const GridMeta& meta);
GridMeta meta_from_json(const nlohmann::json& j);

struct PartAnnotation {
  int part_id = 0;
  Box box;
  friend bool operator==(const PartAnnotation&, const PartAnnotation&) = default;
};

nlohmann::json annotations_to_json(std::span<const PartAnnotation> annotations);
// num_parts > 0 additionally checks part_id < num_parts.
std::vector<PartAnnotation> annotations_from_json(const nlohmann::json& j, int num_parts = 0);
void write_annotations(std::span<const PartAnnotation> annotations,
                       const std::filesystem::path& path);
std::vector<PartAnnotation> read_annotations(const std::filesystem::path& path,
                                             int num_parts = 0);

}  // namespace partmatch
