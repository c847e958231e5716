#ifndef PAIRRANK_DATASET_HPP_
#define PAIRRANK_DATASET_HPP_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairrank/image.hpp"
#include "pairrank/types.hpp"

namespace pairrank {

// One community's posts and comments, both sorted by (created_utc, id).
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Submission> subs, std::vector<Comment> comments);

  // Reads <dir>/submissions.jsonl and, when present, <dir>/comments.jsonl.
  static Dataset load(const std::filesystem::path& dir);

  const std::vector<Submission>& submissions() const { return subs_; }
  const std::vector<Comment>& comments() const { return comments_; }

  const Submission* find(const std::string& id) const;
  // Throws DataError for an unknown id.
  const Submission& at(const std::string& id) const;

 private:
  std::vector<Submission> subs_;
  std::vector<Comment> comments_;
  std::unordered_map<std::string, std::size_t> index_;
};

class ImageSource {
 public:
  virtual ~ImageSource() = default;
  // Empty when the submission has no usable image.
  virtual std::optional<NormalizedImage> image_for(const Submission& s) const = 0;
};

// Resolves Submission::image_ref relative to a base directory.
class DirectoryImageSource : public ImageSource {
 public:
  explicit DirectoryImageSource(std::filesystem::path base)
      : base_(std::move(base)) {}
  std::optional<NormalizedImage> image_for(const Submission& s) const override;

 private:
  std::filesystem::path base_;
};

}  // namespace pairrank

#endif  // PAIRRANK_DATASET_HPP_
