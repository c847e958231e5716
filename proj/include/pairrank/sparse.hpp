#ifndef PAIRRANK_SPARSE_HPP_
#define PAIRRANK_SPARSE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pairrank {

// Sparse vector with strictly increasing indices.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  std::size_t nnz() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  // Appends (index, value); the index must exceed every previous index.
  void push(std::uint32_t index, double value) {
    entries.emplace_back(index, value);
  }

  double dot(std::span<const double> dense) const {
    double acc = 0.0;
    for (const auto& [i, v] : entries) acc += v * dense[i];
    return acc;
  }

  // Appends `other` shifted by `offset`; offset must exceed every current
  // index.
  void append_shifted(const SparseVector& other, std::uint32_t offset) {
    for (const auto& [i, v] : other.entries) push(i + offset, v);
  }

  std::vector<double> to_dense(std::size_t dim) const {
    std::vector<double> d(dim, 0.0);
    for (const auto& [i, v] : entries) d[i] = v;
    return d;
  }

  static SparseVector from_dense(std::span<const double> dense) {
    SparseVector s;
    for (std::size_t i = 0; i < dense.size(); ++i) {
      if (dense[i] != 0.0) s.push(static_cast<std::uint32_t>(i), dense[i]);
    }
    return s;
  }

  bool operator==(const SparseVector&) const = default;
};

struct FeatureGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t dim = 0;

  bool operator==(const FeatureGroup&) const = default;
};

// Contiguous named index ranges making up one feature space.
class FeatureSpace {
 public:
  void add(const std::string& name, std::size_t dim) {
    groups_.push_back({name, dim_, dim});
    dim_ += dim;
  }
  std::size_t dim() const { return dim_; }
  const std::vector<FeatureGroup>& groups() const { return groups_; }
  const FeatureGroup* find(const std::string& name) const {
    for (const auto& g : groups_) {
      if (g.name == name) return &g;
    }
    return nullptr;
  }

  bool operator==(const FeatureSpace&) const = default;

 private:
  std::vector<FeatureGroup> groups_;
  std::size_t dim_ = 0;
};

}  // namespace pairrank

#endif  // PAIRRANK_SPARSE_HPP_
