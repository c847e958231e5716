#include "pairrank/image_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <stdexcept>

#include "pairrank/error.hpp"
#include "pairrank/rng.hpp"

namespace pairrank {
namespace {

Rgb hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c, g = x;
  } else if (hp < 2) {
    r = x, g = c;
  } else if (hp < 3) {
    g = c, b = x;
  } else if (hp < 4) {
    g = x, b = c;
  } else if (hp < 5) {
    r = x, b = c;
  } else {
    r = c, b = x;
  }
  const double m = v - c;
  auto to8 = [](double u) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(u, 0.0, 1.0) * 255));
  };
  return {to8(r + m), to8(g + m), to8(b + m)};
}

int dist2(const Rgb& a, const Rgb& b) {
  const int dr = int{a[0]} - b[0];
  const int dg = int{a[1]} - b[1];
  const int db = int{a[2]} - b[2];
  return dr * dr + dg * dg + db * db;
}

}  // namespace

ColorPalette::ColorPalette() {
  constexpr std::array<double, 3> kSat = {1.0 / 3.0, 2.0 / 3.0, 1.0};
  constexpr std::array<double, 2> kVal = {0.5, 1.0};
  std::size_t k = 0;
  for (int h = 0; h < 8; ++h) {
    for (double s : kSat) {
      for (double v : kVal) colors_[k++] = hsv_to_rgb(45.0 * h, s, v);
    }
  }
  colors_[kBlack] = {0, 0, 0};
  colors_[kWhite] = {255, 255, 255};
}

std::size_t ColorPalette::nearest(Rgb c) const {
  std::size_t best = 0;
  int best_d = dist2(c, colors_[0]);
  for (std::size_t i = 1; i < kSize; ++i) {
    const int d = dist2(c, colors_[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

const ColorPalette& default_palette() {
  static const ColorPalette p;
  return p;
}

std::array<double, ColorPalette::kSize> color_histogram(
    const NormalizedImage& img, const ColorPalette& palette) {
  // Direct-mapped memo of recent colour lookups.
  constexpr std::size_t kSlots = 4096;
  std::vector<std::uint32_t> keys(kSlots, UINT32_MAX);
  std::vector<std::uint8_t> bins(kSlots, 0);
  std::array<std::uint64_t, ColorPalette::kSize> counts{};
  const auto& px = img.pixels();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    const std::uint32_t key = (std::uint32_t{px[i]} << 16) |
                              (std::uint32_t{px[i + 1]} << 8) | px[i + 2];
    const std::size_t slot = (key * 2654435761u) >> 20;
    if (keys[slot] != key) {
      keys[slot] = key;
      bins[slot] = static_cast<std::uint8_t>(
          palette.nearest({px[i], px[i + 1], px[i + 2]}));
    }
    ++counts[bins[slot]];
  }
  const double total = static_cast<double>(px.size() / 3);
  std::array<double, ColorPalette::kSize> hist{};
  for (std::size_t k = 0; k < hist.size(); ++k) hist[k] = counts[k] / total;
  return hist;
}

std::vector<double> hog_features(const NormalizedImage& img) {
  constexpr int n = NormalizedImage::kSize;
  const auto gray = grayscale(img);
  auto at = [&](int r, int c) {
    r = std::clamp(r, 0, n - 1);
    c = std::clamp(c, 0, n - 1);
    return gray[static_cast<std::size_t>(r) * n + c];
  };

  std::vector<double> cells(
      static_cast<std::size_t>(kHogCellsPerSide) * kHogCellsPerSide * kHogBins,
      0.0);
  constexpr double kBinWidth = 180.0 / kHogBins;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double gx = at(r, c + 1) - at(r, c - 1);
      const double gy = at(r + 1, c) - at(r - 1, c);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / M_PI;
      if (angle < 0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      const double pos = angle / kBinWidth;
      const int lo = static_cast<int>(std::floor(pos)) % kHogBins;
      const int hi = (lo + 1) % kHogBins;
      const double frac = pos - std::floor(pos);
      double* cell =
          &cells[(static_cast<std::size_t>(r / kHogCell) * kHogCellsPerSide +
                  c / kHogCell) *
                 kHogBins];
      cell[lo] += mag * (1.0 - frac);
      cell[hi] += mag * frac;
    }
  }

  constexpr double kClip = 0.2;
  constexpr double kEps = 1e-6;
  std::vector<double> out(kHogDim, 0.0);
  for (int br = 0; br < kHogBlocksPerSide; ++br) {
    for (int bc = 0; bc < kHogBlocksPerSide; ++bc) {
      double* block =
          &out[(static_cast<std::size_t>(br) * kHogBlocksPerSide + bc) *
               kHogBlockDim];
      std::size_t k = 0;
      for (int dr = 0; dr < 2; ++dr) {
        for (int dc = 0; dc < 2; ++dc) {
          const double* cell =
              &cells[(static_cast<std::size_t>(br + dr) * kHogCellsPerSide +
                      bc + dc) *
                     kHogBins];
          for (int b = 0; b < kHogBins; ++b) block[k++] = cell[b];
        }
      }
      for (int pass = 0; pass < 2; ++pass) {
        double ss = 0.0;
        for (std::size_t i = 0; i < kHogBlockDim; ++i) ss += block[i] * block[i];
        if (ss == 0.0) break;
        const double norm = std::sqrt(ss + kEps * kEps);
        for (std::size_t i = 0; i < kHogBlockDim; ++i) {
          block[i] /= norm;
          if (pass == 0) block[i] = std::min(block[i], kClip);
        }
      }
    }
  }
  return out;
}

RandomProjection::RandomProjection(std::size_t in_dim, std::size_t out_dim,
                                   std::uint64_t seed)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      seed_(seed),
      scale_(1.0 / std::sqrt(static_cast<double>(out_dim))) {
  if (in_dim == 0 || out_dim == 0) {
    throw std::invalid_argument("projection dimensions must be positive");
  }
}

int RandomProjection::sign(std::size_t row, std::size_t col) const {
  const std::uint64_t word = mix64(seed_, row, col / 64);
  return ((word >> (col % 64)) & 1) ? -1 : 1;
}

std::vector<double> RandomProjection::project(
    std::span<const double> dense) const {
  if (dense.size() != in_dim_) {
    throw std::invalid_argument("projection input has dimension " +
                                std::to_string(dense.size()) + ", expected " +
                                std::to_string(in_dim_));
  }
  double total = 0.0;
  for (double v : dense) total += v;
  std::vector<double> y(out_dim_, 0.0);
  const std::size_t words = (in_dim_ + 63) / 64;
  for (std::size_t r = 0; r < out_dim_; ++r) {
    // sum_c s_rc v_c = total - 2 * sum over negative-sign columns.
    double neg = 0.0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t bits = mix64(seed_, r, w);
      const std::size_t base = w * 64;
      const std::size_t end = std::min<std::size_t>(64, in_dim_ - base);
      for (std::size_t k = 0; k < end; ++k) {
        neg += static_cast<double>((bits >> k) & 1) * dense[base + k];
      }
    }
    y[r] = (total - 2.0 * neg) * scale_;
  }
  return y;
}

std::vector<double> RandomProjection::project(const SparseVector& v) const {
  std::vector<double> y(out_dim_, 0.0);
  for (const auto& [c, value] : v.entries) {
    if (c >= in_dim_) {
      throw std::invalid_argument("sparse projection input index out of range");
    }
    for (std::size_t r = 0; r < out_dim_; ++r) {
      y[r] += sign(r, c) * value;
    }
  }
  for (auto& x : y) x *= scale_;
  return y;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::string name) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) throw DataError(where + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  unsigned long long dim = 0, n = 0;
  char tag_dim[8] = {}, tag_n[8] = {};
  if (std::sscanf(line.c_str(), "#%3s\t%llu\t%1s\t%llu", tag_dim, &dim, tag_n,
                  &n) != 4 ||
      std::string(tag_dim) != "dim" || std::string(tag_n) != "n" || dim == 0) {
    throw DataError(where + ": line 1: expected '#dim<TAB>D<TAB>n<TAB>N'");
  }
  EmbeddingTable table;
  table.name = name.empty() ? path.stem().string() : std::move(name);
  table.dim = dim;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string row = where + ": line " + std::to_string(line_no);
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw DataError(row + ": expected 'id<TAB>values'");
    }
    std::string id = line.substr(0, tab);
    std::vector<double> values;
    values.reserve(dim);
    const char* p = line.c_str() + tab + 1;
    const char* end = line.c_str() + line.size();
    while (p < end) {
      char* next = nullptr;
      const double v = std::strtod(p, &next);
      if (next == p || !std::isfinite(v)) {
        throw DataError(row + ": bad number");
      }
      values.push_back(v);
      p = next;
      if (p < end) {
        if (*p != ',') throw DataError(row + ": expected ','");
        ++p;
      }
    }
    if (values.size() != dim) {
      throw DataError(row + ": " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(dim));
    }
    if (!table.vectors.emplace(std::move(id), std::move(values)).second) {
      throw DataError(row + ": duplicate id");
    }
  }
  if (table.vectors.size() != n) {
    throw DataError(where + ": header declares " + std::to_string(n) +
                    " rows, found " + std::to_string(table.vectors.size()));
  }
  return table;
}

void write_embeddings(const std::filesystem::path& path,
                      const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "#dim\t" << table.dim << "\tn\t" << table.vectors.size() << '\n';
  std::map<std::string, const std::vector<double>*> sorted;
  for (const auto& [id, v] : table.vectors) sorted.emplace(id, &v);
  char buf[40];
  for (const auto& [id, v] : sorted) {
    if (v->size() != table.dim) {
      throw std::invalid_argument("embedding '" + id + "' has wrong dimension");
    }
    out << id << '\t';
    for (std::size_t i = 0; i < v->size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", (*v)[i]);
      if (i) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace pairrank
