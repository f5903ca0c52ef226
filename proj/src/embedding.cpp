#include "gauc/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "gauc/error.hpp"

namespace gauc {

namespace {

static_assert(std::endian::native == std::endian::little,
              "embedding codec assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

void check_finite(std::span<const float> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("non-finite embedding component at flat index " + std::to_string(i));
    }
  }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (dim_ < 1) throw ShapeError("embedding dim must be >= 1");
  if (values_.size() != rows_ * dim_) {
    throw ShapeError("embedding values length " + std::to_string(values_.size()) +
                     " != rows*dim " + std::to_string(rows_ * dim_));
  }
  check_finite(values_);
}

EmbeddingMatrix EmbeddingMatrix::from_eigen(const Eigen::MatrixXd& m) {
  std::vector<float> v(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      v[static_cast<std::size_t>(i * m.cols() + j)] = static_cast<float>(m(i, j));
  return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), std::move(v)};
}

EmbeddingMatrix EmbeddingMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ShapeError("from_rows needs at least one row to infer dim");
  const std::size_t dim = rows.front().size();
  std::vector<float> v;
  v.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw ShapeError("ragged rows");
    for (double x : r) v.push_back(static_cast<float>(x));
  }
  return {rows.size(), dim, std::move(v)};
}

Eigen::VectorXd EmbeddingMatrix::row_vector(std::size_t i) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim_));
  auto r = row(i);
  for (std::size_t j = 0; j < dim_; ++j) out(static_cast<Eigen::Index>(j)) = r[j];
  return out;
}

Eigen::MatrixXd EmbeddingMatrix::to_eigen() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values_[i * dim_ + j];
  return out;
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<float> v;
  v.reserve(indices.size() * dim_);
  for (std::size_t idx : indices) {
    if (idx >= rows_) throw IndexError("row index " + std::to_string(idx) + " out of range");
    auto r = row(idx);
    v.insert(v.end(), r.begin(), r.end());
  }
  return {indices.size(), dim_, std::move(v)};
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& matrix) {
  std::vector<std::uint8_t> out;
  out.reserve(kEmbeddingHeaderBytes + matrix.values().size() * sizeof(float));
  out.insert(out.end(), std::begin(kEmbeddingMagic), std::end(kEmbeddingMagic));
  put<std::uint32_t>(out, kEmbeddingVersion);
  put<std::uint64_t>(out, matrix.rows());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.dim()));
  for (float f : matrix.values()) put<float>(out, f);
  return out;
}

EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kEmbeddingHeaderBytes) throw FormatError("embedding file shorter than header");
  if (std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) throw FormatError("bad embedding magic");
  const auto version = get<std::uint32_t>(bytes, 4);
  if (version != kEmbeddingVersion) {
    throw FormatError("unsupported embedding format version " + std::to_string(version));
  }
  const auto rows = get<std::uint64_t>(bytes, 8);
  const auto dim = get<std::uint32_t>(bytes, 16);
  if (dim == 0) throw FormatError("embedding dim is 0");
  const std::size_t payload = bytes.size() - kEmbeddingHeaderBytes;
  if (rows > payload / (sizeof(float) * dim) || payload != rows * dim * sizeof(float)) {
    throw FormatError("embedding payload is " + std::to_string(payload) + " bytes, header declares " +
                      std::to_string(rows) + "x" + std::to_string(dim));
  }
  std::vector<float> values(static_cast<std::size_t>(rows) * dim);
  if (!values.empty()) {
    std::memcpy(values.data(), bytes.data() + kEmbeddingHeaderBytes, payload);
  }
  return {static_cast<std::size_t>(rows), dim, std::move(values)};
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_embeddings(bytes);
}

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  const auto bytes = encode_embeddings(matrix);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace gauc
