#include "pairrank/dataset.hpp"

#include <algorithm>
#include <tuple>

#include "pairrank/error.hpp"
#include "pairrank/ingest.hpp"

namespace pairrank {

Dataset::Dataset(std::vector<Submission> subs, std::vector<Comment> comments)
    : subs_(std::move(subs)), comments_(std::move(comments)) {
  std::stable_sort(subs_.begin(), subs_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.created_utc, a.id) < std::tie(b.created_utc, b.id);
  });
  std::stable_sort(comments_.begin(), comments_.end(),
                   [](const auto& a, const auto& b) {
                     return std::tie(a.created_utc, a.id) <
                            std::tie(b.created_utc, b.id);
                   });
  for (std::size_t i = 0; i < subs_.size(); ++i) {
    if (!index_.emplace(subs_[i].id, i).second) {
      throw DataError("duplicate submission id '" + subs_[i].id + "'");
    }
  }
}

Dataset Dataset::load(const std::filesystem::path& dir) {
  auto subs = read_submissions(dir / "submissions.jsonl");
  std::vector<Comment> comments;
  if (std::filesystem::exists(dir / "comments.jsonl")) {
    comments = read_comments(dir / "comments.jsonl").records;
  }
  return Dataset(std::move(subs.records), std::move(comments));
}

const Submission* Dataset::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &subs_[it->second];
}

const Submission& Dataset::at(const std::string& id) const {
  const Submission* s = find(id);
  if (!s) throw DataError("unknown submission id '" + id + "'");
  return *s;
}

std::optional<NormalizedImage> DirectoryImageSource::image_for(
    const Submission& s) const {
  if (!s.image_ref) return std::nullopt;
  auto loaded = load_normalized_image(base_ / *s.image_ref);
  return std::move(loaded.image);
}

}  // namespace pairrank
