#ifndef PAIRRANK_IMAGE_HPP_
#define PAIRRANK_IMAGE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pairrank {

// 256x256 RGB8, row-major, channel order R,G,B.
class NormalizedImage {
 public:
  static constexpr int kSize = 256;
  static constexpr std::size_t kBytes =
      static_cast<std::size_t>(kSize) * kSize * 3;

  // Black image.
  NormalizedImage() : pixels_(kBytes, 0) {}
  // Throws std::invalid_argument unless pixels.size() == kBytes.
  explicit NormalizedImage(std::vector<std::uint8_t> pixels);

  static NormalizedImage filled(std::uint8_t r, std::uint8_t g,
                                std::uint8_t b);

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

  std::array<std::uint8_t, 3> at(int row, int col) const {
    const std::size_t o = offset(row, col);
    return {pixels_[o], pixels_[o + 1], pixels_[o + 2]};
  }

  void set(int row, int col, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const std::size_t o = offset(row, col);
    pixels_[o] = r;
    pixels_[o + 1] = g;
    pixels_[o + 2] = b;
  }

  bool operator==(const NormalizedImage&) const = default;

 private:
  static std::size_t offset(int row, int col) {
    return (static_cast<std::size_t>(row) * kSize + col) * 3;
  }

  std::vector<std::uint8_t> pixels_;
};

// 0.299R + 0.587G + 0.114B per pixel, row-major 256x256.
std::vector<double> grayscale(const NormalizedImage& img);

struct ImageLoadResult {
  std::optional<NormalizedImage> image;
  std::string reason;  // set when image is empty
};

// Decodes a PNG/JPEG file and resamples it bilinearly to 256x256 RGB.
// Multi-frame files and undecodable files yield an empty result with the
// reason filled in.
ImageLoadResult load_normalized_image(const std::filesystem::path& path);

// Same, for an encoded buffer already in memory.
ImageLoadResult decode_normalized_image(const std::vector<std::uint8_t>& bytes);

// Lossless PNG encoding.
std::vector<std::uint8_t> encode_png(const NormalizedImage& img);
void write_png(const std::filesystem::path& path, const NormalizedImage& img);

}  // namespace pairrank

#endif  // PAIRRANK_IMAGE_HPP_
