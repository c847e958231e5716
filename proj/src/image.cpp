#include "pairrank/image.hpp"

#include <fstream>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace pairrank {
namespace {

NormalizedImage from_bgr(const cv::Mat& decoded) {
  cv::Mat resized;
  cv::resize(decoded, resized,
             cv::Size(NormalizedImage::kSize, NormalizedImage::kSize), 0, 0,
             cv::INTER_LINEAR);
  cv::Mat rgb;
  cv::cvtColor(resized, rgb, cv::COLOR_BGR2RGB);
  std::vector<std::uint8_t> pixels(NormalizedImage::kBytes);
  for (int r = 0; r < NormalizedImage::kSize; ++r) {
    const auto* row = rgb.ptr<std::uint8_t>(r);
    std::copy(row, row + NormalizedImage::kSize * 3,
              pixels.begin() + static_cast<std::ptrdiff_t>(r) *
                                   NormalizedImage::kSize * 3);
  }
  return NormalizedImage(std::move(pixels));
}

ImageLoadResult finish(const cv::Mat& decoded) {
  if (decoded.empty()) return {std::nullopt, "decode failed"};
  if (decoded.depth() != CV_8U || decoded.channels() != 3) {
    return {std::nullopt, "unsupported pixel format"};
  }
  return {from_bgr(decoded), ""};
}

}  // namespace

NormalizedImage::NormalizedImage(std::vector<std::uint8_t> pixels)
    : pixels_(std::move(pixels)) {
  if (pixels_.size() != kBytes) {
    throw std::invalid_argument("normalized image must be 256x256x3 bytes");
  }
}

NormalizedImage NormalizedImage::filled(std::uint8_t r, std::uint8_t g,
                                        std::uint8_t b) {
  std::vector<std::uint8_t> px(kBytes);
  for (std::size_t i = 0; i < kBytes; i += 3) {
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }
  return NormalizedImage(std::move(px));
}

std::vector<double> grayscale(const NormalizedImage& img) {
  const auto& px = img.pixels();
  std::vector<double> gray(px.size() / 3);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
  }
  return gray;
}

ImageLoadResult load_normalized_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    return {std::nullopt, "missing file " + path.string()};
  }
  try {
    if (cv::imcount(path.string(), cv::IMREAD_COLOR) > 1) {
      return {std::nullopt, "multi-frame image"};
    }
    return finish(cv::imread(path.string(), cv::IMREAD_COLOR));
  } catch (const cv::Exception& e) {
    return {std::nullopt, std::string("decode failed: ") + e.what()};
  }
}

ImageLoadResult decode_normalized_image(
    const std::vector<std::uint8_t>& bytes) {
  if (bytes.empty()) return {std::nullopt, "empty buffer"};
  try {
    return finish(cv::imdecode(bytes, cv::IMREAD_COLOR));
  } catch (const cv::Exception& e) {
    return {std::nullopt, std::string("decode failed: ") + e.what()};
  }
}

std::vector<std::uint8_t> encode_png(const NormalizedImage& img) {
  cv::Mat rgb(NormalizedImage::kSize, NormalizedImage::kSize, CV_8UC3,
              const_cast<std::uint8_t*>(img.pixels().data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", bgr, out)) {
    throw std::runtime_error("PNG encoding failed");
  }
  return out;
}

void write_png(const std::filesystem::path& path, const NormalizedImage& img) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace pairrank
