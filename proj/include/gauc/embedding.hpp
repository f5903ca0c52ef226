#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gauc {

// Dense row-major matrix of binary32 embedding components, one row per sample.
// Components are validated finite on construction; the object is immutable.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values);

  static EmbeddingMatrix from_eigen(const Eigen::MatrixXd& m);
  static EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> values() const { return values_; }
  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }

  Eigen::VectorXd row_vector(std::size_t i) const;
  Eigen::MatrixXd to_eigen() const;

  // Rows gathered in the given order.
  EmbeddingMatrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 1;
  std::vector<float> values_;
};

// On-disk layout, little-endian: "GEMB", u32 version, u64 rows, u32 dim,
// then rows*dim binary32 values row-major.
inline constexpr char kEmbeddingMagic[4] = {'G', 'E', 'M', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 4 + 4 + 8 + 4;

EmbeddingMatrix read_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

// In-memory codec used by the file functions.
EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& matrix);

}  // namespace gauc
