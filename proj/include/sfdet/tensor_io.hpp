#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sfdet/scoremap.hpp"

namespace sfdet {

/// Dense float32 tensor as stored in SFT1 files.
///
/// Layout: "SFT1", dtype byte (1 = float32 LE), rank byte, rank x uint32 LE
/// dims, then the row-major payload.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

inline constexpr std::uint8_t kDtypeFloat32 = 1;

Tensor read_sft1(std::istream& in);
void write_sft1(std::ostream& out, const Tensor& t);

/// Loads SFT1, or a comma-separated rank-2 grid when the file does not start
/// with the SFT1 magic.
Tensor load_tensor(const std::filesystem::path& path);
void save_tensor(const std::filesystem::path& path, const Tensor& t);

Tensor parse_csv_grid(const std::string& text);

/// Rank 3 maps to (H, W, C); rank 2 maps to (H, W, 1).
ScoreMap tensor_to_map(const Tensor& t);
/// Always rank 3. Values are narrowed to float32.
Tensor map_to_tensor(const ScoreMap& m);

}  // namespace sfdet
