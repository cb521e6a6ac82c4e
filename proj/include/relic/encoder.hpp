#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relic/corpus.hpp"

namespace relic {

struct EncoderConfig {
  std::size_t d_in = std::size_t{1} << 18;
  std::size_t d_out = 64;
  int ngram_min = 2;
  int ngram_max = 4;
};

/// Sparse vector with strictly increasing indices.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  std::size_t dim = 0;

  std::size_t nnz() const { return indices.size(); }
  double squared_norm() const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

/// Unit-norm hashed n-gram features (zero vector for texts with no n-grams).
using FeatureVector = SparseVector;

double dot(const SparseVector& a, const SparseVector& b);

/// Elementwise sum of sparse vectors of equal dimension.
SparseVector add(const SparseVector& a, const SparseVector& b);

/// Returns v / |v|, or v unchanged when it is the zero vector.
SparseVector normalized(SparseVector v);

/// Lowercased (ASCII range) code points of UTF-8 text. Invalid bytes map to U+FFFD.
std::u32string decode_lower(std::string_view text);

/// Raw character n-gram counts, n in [ngram_min, ngram_max], bucketed by
/// content_hash(utf8(n-gram)) mod d_in.
SparseVector ngram_counts(std::string_view text, const EncoderConfig& cfg);
SparseVector ngram_counts(std::u32string_view text, const EncoderConfig& cfg);

FeatureVector featurize(std::string_view text, const EncoderConfig& cfg);

/// Separator placed between the positive and negative halves of a pair.
inline constexpr std::string_view kPairSeparator = "\n\x1f\n";

/// positive.query \n positive.response \n\x1F\n negative.query \n negative.response
std::string pair_text(const ExampleTriplet& positive, const ExampleTriplet& negative);

/// Per-item n-gram block, reused for single-item and pair features.
struct EncodedItem {
  SparseVector counts;
  std::u32string head;  // first ngram_max-1 code points
  std::u32string tail;  // last ngram_max-1 code points
};

EncodedItem encode_item(const ExampleTriplet& item, const EncoderConfig& cfg);

/// N-grams of pair_text that overlap the separator.
SparseVector pair_boundary_counts(const EncodedItem& positive, const EncodedItem& negative,
                                  const EncoderConfig& cfg);

/// Raw counts of pair_text(positive, negative), assembled from item blocks.
SparseVector pair_counts(const EncodedItem& positive, const EncodedItem& negative,
                         const EncoderConfig& cfg);

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// I.i.d. uniform entries in [-1/sqrt(rows), +1/sqrt(rows)].
DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Dual-encoder parameters for one auxiliary language: phi encodes target
/// items, psi encodes auxiliary items and pairs.
struct RetrieverParams {
  DenseMatrix phi;
  DenseMatrix psi;

  std::size_t d_in() const { return phi.rows(); }
  std::size_t d_out() const { return phi.cols(); }

  friend bool operator==(const RetrieverParams&, const RetrieverParams&) = default;
};

/// Untrained retriever: phi drawn from `seed`, psi initialized to the same
/// matrix (both towers start from one shared encoder).
RetrieverParams init_params(const EncoderConfig& cfg, std::uint64_t seed);

struct Embedding {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const Embedding&, const Embedding&) = default;
};

/// matrix^T * fv. Throws InvariantError on dimension mismatch.
Embedding embed(const DenseMatrix& matrix, const SparseVector& fv);

/// out += scale * matrix^T * v
void embed_accumulate(const DenseMatrix& matrix, const SparseVector& v, double scale,
                      std::span<double> out);

/// Dot product; throws InvariantError on length mismatch.
double similarity(const Embedding& u, const Embedding& v);
double dot(std::span<const double> u, std::span<const double> v);

/// Mean of embed(reference, featurize(query + " " + response)) over both partitions.
Embedding mean_bank_embedding(const ExampleBank& bank, const DenseMatrix& reference,
                              const EncoderConfig& cfg);

/// Binary layout: "RLIC", u32 version, u64 d_in, u64 d_out, then phi and psi
/// as row-major little-endian float64.
std::string serialize_params(const RetrieverParams& params);
RetrieverParams deserialize_params(std::string_view bytes);

void save_params(const RetrieverParams& params, const std::filesystem::path& path);
RetrieverParams load_params(const std::filesystem::path& path);

}  // namespace relic
