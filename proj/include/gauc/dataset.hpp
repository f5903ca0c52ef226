#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gauc/embedding.hpp"

namespace gauc {

enum class Split : std::uint8_t { kTrain, kProbe, kTest };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

// Embeddings plus per-row class label and split tag. Immutable once built.
class LabeledDataset {
 public:
  LabeledDataset(EmbeddingMatrix embeddings, std::vector<int> labels, std::vector<Split> splits,
                 std::vector<std::string> class_names);

  const EmbeddingMatrix& embeddings() const { return embeddings_; }
  std::span<const int> labels() const { return labels_; }
  std::span<const Split> splits() const { return splits_; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  std::size_t rows() const { return embeddings_.rows(); }
  std::size_t dim() const { return embeddings_.dim(); }
  std::size_t num_classes() const { return class_names_.size(); }
  int label(std::size_t row) const { return labels_[row]; }
  Split split(std::size_t row) const { return splits_[row]; }

  // Row indices tagged with `s`, ascending.
  const std::vector<std::size_t>& rows_in(Split s) const;
  // Train rows of class `c`, ascending.
  const std::vector<std::size_t>& train_rows_of(int c) const;

 private:
  EmbeddingMatrix embeddings_;
  std::vector<int> labels_;
  std::vector<Split> splits_;
  std::vector<std::string> class_names_;
  std::vector<std::vector<std::size_t>> by_split_;
  std::vector<std::vector<std::size_t>> train_by_class_;
};

// Ordered, class-balanced set of train-row indices. Construction validates
// uniqueness, train membership and exactly `shots_per_class` rows per class.
class Coreset {
 public:
  Coreset(const LabeledDataset& dataset, std::vector<std::size_t> indices, std::size_t shots_per_class);

  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  std::size_t shots_per_class() const { return shots_per_class_; }
  std::size_t operator[](std::size_t pos) const { return indices_[pos]; }

  // Copy with the member at `pos` replaced by `row`, revalidated.
  Coreset with_swap(const LabeledDataset& dataset, std::size_t pos, std::size_t row) const;

  friend bool operator==(const Coreset&, const Coreset&) = default;

 private:
  std::vector<std::size_t> indices_;
  std::size_t shots_per_class_;
};

struct PromptEmbeddingSet {
  PromptEmbeddingSet(EmbeddingMatrix original, EmbeddingMatrix paraphrases);

  EmbeddingMatrix original;
  EmbeddingMatrix paraphrases;
};

// Label CSV: header "index,label,split", one row per sample in index order.
struct LabelTable {
  std::vector<int> labels;
  std::vector<Split> splits;
};

LabelTable read_labels(const std::filesystem::path& path);
void write_labels(const LabelTable& table, const std::filesystem::path& path);
std::vector<std::string> read_class_names(const std::filesystem::path& path);
void write_class_names(const std::vector<std::string>& names, const std::filesystem::path& path);

LabeledDataset load_dataset(const std::filesystem::path& embeddings, const std::filesystem::path& labels,
                            const std::filesystem::path& class_names);

struct SynthConfig {
  std::size_t classes = 8;
  std::size_t per_class = 200;
  std::size_t dim = 32;
  double separation = 3.0;
  // Relative class sizes; empty means balanced. Class k gets
  // round(per_class * imbalance[k] / max(imbalance)) rows (at least 1).
  std::vector<double> imbalance;
  std::uint64_t seed = 0;
};

// Isotropic unit-variance Gaussian clusters around the vertices of a
// randomly rotated regular simplex with edge length `separation`. Rows are
// split 70/10/20 into train/probe/test within each class.
LabeledDataset generate_synthetic(const SynthConfig& config);

struct PromptSynthConfig {
  std::size_t text_dim = 8;
  std::size_t templates = 4;
  std::size_t paraphrases_per_template = 4;
  double paraphrase_noise = 0.5;
  // Overall magnitude of prompt vectors relative to unit-variance embeddings.
  double scale = 10.0;
  std::uint64_t seed = 0;
};

PromptEmbeddingSet generate_prompts(const PromptSynthConfig& config);

}  // namespace gauc
