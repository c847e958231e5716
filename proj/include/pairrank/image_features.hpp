#ifndef PAIRRANK_IMAGE_FEATURES_HPP_
#define PAIRRANK_IMAGE_FEATURES_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairrank/image.hpp"
#include "pairrank/sparse.hpp"

namespace pairrank {

using Rgb = std::array<std::uint8_t, 3>;

// 8 hues x 3 saturations x 2 values on an HSV grid, then black and white.
class ColorPalette {
 public:
  static constexpr std::size_t kSize = 50;
  static constexpr std::size_t kBlack = 48;
  static constexpr std::size_t kWhite = 49;

  ColorPalette();

  const std::array<Rgb, kSize>& colors() const { return colors_; }
  const Rgb& operator[](std::size_t i) const { return colors_[i]; }
  // Nearest entry by Euclidean RGB distance; ties go to the lower index.
  std::size_t nearest(Rgb c) const;

 private:
  std::array<Rgb, kSize> colors_;
};

const ColorPalette& default_palette();

// L1-normalized nearest-palette-color histogram.
std::array<double, ColorPalette::kSize> color_histogram(
    const NormalizedImage& img, const ColorPalette& palette = default_palette());

// 8x8 cells, 9 unsigned orientation bins centred on 0, 20, ..., 160
// degrees, 2x2-cell blocks at stride one with L2-Hys normalization.
inline constexpr int kHogCell = 8;
inline constexpr int kHogBins = 9;
inline constexpr int kHogCellsPerSide = NormalizedImage::kSize / kHogCell;
inline constexpr int kHogBlocksPerSide = kHogCellsPerSide - 1;
inline constexpr std::size_t kHogBlockDim = 4 * kHogBins;
inline constexpr std::size_t kHogDim =
    static_cast<std::size_t>(kHogBlocksPerSide) * kHogBlocksPerSide *
    kHogBlockDim;

// Layout: block (row-major) x cell in block (tl, tr, bl, br) x bin.
std::vector<double> hog_features(const NormalizedImage& img);

// y = R v / sqrt(out_dim) with R entries +-1, each a pure function of
// (seed, row, column).
class RandomProjection {
 public:
  RandomProjection(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  std::uint64_t seed() const { return seed_; }

  // +1 or -1.
  int sign(std::size_t row, std::size_t col) const;

  // Both throw std::invalid_argument on a dimension mismatch.
  std::vector<double> project(std::span<const double> dense) const;
  std::vector<double> project(const SparseVector& v) const;

 private:
  std::size_t in_dim_;
  std::size_t out_dim_;
  std::uint64_t seed_;
  double scale_;
};

struct EmbeddingTable {
  std::string name;
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  const std::vector<double>* find(const std::string& id) const {
    auto it = vectors.find(id);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

// Header "#dim<TAB>D<TAB>n<TAB>N", then "id<TAB>v1,...,vD" per row. The
// table name defaults to the file stem. Throws DataError naming the row.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::string name = "");
// Rows in ascending id order, values printed with 17 significant digits.
void write_embeddings(const std::filesystem::path& path,
                      const EmbeddingTable& table);

}  // namespace pairrank

#endif  // PAIRRANK_IMAGE_FEATURES_HPP_
