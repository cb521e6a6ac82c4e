#include "relic/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <fmt/core.h>

#include "relic/error.hpp"
#include "relic/rng.hpp"

namespace relic {
namespace {

constexpr char kParamsMagic[4] = {'R', 'L', 'I', 'C'};
constexpr std::uint32_t kParamsVersion = 1;
constexpr std::size_t kParamsHeaderSize = 4 + 4 + 8 + 8;

void append_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Sorted bucket ids -> (index, count) runs.
SparseVector from_buckets(std::vector<std::uint32_t>& buckets, std::size_t dim) {
  std::sort(buckets.begin(), buckets.end());
  SparseVector v;
  v.dim = dim;
  for (std::size_t i = 0; i < buckets.size();) {
    std::size_t j = i;
    while (j < buckets.size() && buckets[j] == buckets[i]) ++j;
    v.indices.push_back(buckets[i]);
    v.values.push_back(static_cast<double>(j - i));
    i = j;
  }
  return v;
}

// Hashes every n-gram window [start, start+n) of `cps` accepted by `keep`.
template <typename Keep>
SparseVector hashed_ngrams(std::u32string_view cps, const EncoderConfig& cfg, Keep&& keep) {
  std::string bytes;
  std::vector<std::size_t> offsets;
  offsets.reserve(cps.size() + 1);
  for (char32_t cp : cps) {
    offsets.push_back(bytes.size());
    append_utf8(cp, bytes);
  }
  offsets.push_back(bytes.size());

  std::vector<std::uint32_t> buckets;
  const std::size_t len = cps.size();
  for (int n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
    const auto un = static_cast<std::size_t>(n);
    if (len < un) continue;
    for (std::size_t start = 0; start + un <= len; ++start) {
      if (!keep(start, un)) continue;
      std::string_view gram(bytes.data() + offsets[start], offsets[start + un] - offsets[start]);
      buckets.push_back(static_cast<std::uint32_t>(content_hash(gram).value % cfg.d_in));
    }
  }
  return from_buckets(buckets, cfg.d_in);
}

void check_dims(const SparseVector& a, const SparseVector& b) {
  if (a.dim != b.dim) {
    throw InvariantError(fmt::format("sparse dimension mismatch: {} vs {}", a.dim, b.dim));
  }
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint64_t get_u64(const unsigned char* p, int width) {
  std::uint64_t v = 0;
  for (int i = width - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

double dot(const SparseVector& a, const SparseVector& b) {
  check_dims(a, b);
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (a.indices[i] > b.indices[j]) {
      ++j;
    } else {
      s += a.values[i] * b.values[j];
      ++i;
      ++j;
    }
  }
  return s;
}

SparseVector add(const SparseVector& a, const SparseVector& b) {
  check_dims(a, b);
  SparseVector out;
  out.dim = a.dim;
  out.indices.reserve(a.nnz() + b.nnz());
  out.values.reserve(a.nnz() + b.nnz());
  std::size_t i = 0, j = 0;
  while (i < a.indices.size() || j < b.indices.size()) {
    if (j == b.indices.size() || (i < a.indices.size() && a.indices[i] < b.indices[j])) {
      out.indices.push_back(a.indices[i]);
      out.values.push_back(a.values[i++]);
    } else if (i == a.indices.size() || b.indices[j] < a.indices[i]) {
      out.indices.push_back(b.indices[j]);
      out.values.push_back(b.values[j++]);
    } else {
      out.indices.push_back(a.indices[i]);
      out.values.push_back(a.values[i++] + b.values[j++]);
    }
  }
  return out;
}

SparseVector normalized(SparseVector v) {
  const double norm = std::sqrt(v.squared_norm());
  if (norm == 0.0) return v;
  for (double& x : v.values) x /= norm;
  return v;
}

std::u32string decode_lower(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  const auto* p = reinterpret_cast<const unsigned char*>(text.data());
  const auto* const end = p + text.size();
  while (p < end) {
    char32_t cp;
    int extra;
    if (*p < 0x80) {
      cp = *p;
      extra = 0;
    } else if ((*p & 0xE0) == 0xC0) {
      cp = *p & 0x1F;
      extra = 1;
    } else if ((*p & 0xF0) == 0xE0) {
      cp = *p & 0x0F;
      extra = 2;
    } else if ((*p & 0xF8) == 0xF0) {
      cp = *p & 0x07;
      extra = 3;
    } else {
      out += U'�';
      ++p;
      continue;
    }
    if (end - p <= extra) {
      out += U'�';
      ++p;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      if ((p[k] & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (p[k] & 0x3F);
    }
    if (!ok) {
      out += U'�';
      ++p;
      continue;
    }
    p += extra + 1;
    if (cp >= U'A' && cp <= U'Z') cp += 32;
    out += cp;
  }
  return out;
}

SparseVector ngram_counts(std::u32string_view text, const EncoderConfig& cfg) {
  return hashed_ngrams(text, cfg, [](std::size_t, std::size_t) { return true; });
}

SparseVector ngram_counts(std::string_view text, const EncoderConfig& cfg) {
  return ngram_counts(std::u32string_view(decode_lower(text)), cfg);
}

FeatureVector featurize(std::string_view text, const EncoderConfig& cfg) {
  return normalized(ngram_counts(text, cfg));
}

std::string pair_text(const ExampleTriplet& positive, const ExampleTriplet& negative) {
  std::string out = item_text(positive);
  out += kPairSeparator;
  out += item_text(negative);
  return out;
}

EncodedItem encode_item(const ExampleTriplet& item, const EncoderConfig& cfg) {
  const std::u32string cps = decode_lower(item_text(item));
  const std::size_t edge = static_cast<std::size_t>(std::max(cfg.ngram_max - 1, 0));
  EncodedItem out;
  out.counts = ngram_counts(std::u32string_view(cps), cfg);
  out.head = cps.substr(0, std::min(edge, cps.size()));
  out.tail = cps.substr(cps.size() - std::min(edge, cps.size()));
  return out;
}

SparseVector pair_boundary_counts(const EncodedItem& positive, const EncodedItem& negative,
                                  const EncoderConfig& cfg) {
  const std::u32string sep = decode_lower(kPairSeparator);
  std::u32string window = positive.tail;
  window += sep;
  window += negative.head;
  const std::size_t sep_begin = positive.tail.size();
  const std::size_t sep_end = sep_begin + sep.size();
  return hashed_ngrams(window, cfg, [&](std::size_t start, std::size_t n) {
    return start < sep_end && start + n > sep_begin;
  });
}

SparseVector pair_counts(const EncodedItem& positive, const EncodedItem& negative,
                         const EncoderConfig& cfg) {
  return add(add(positive.counts, negative.counts), pair_boundary_counts(positive, negative, cfg));
}

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  DenseMatrix m(rows, cols);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& x : m.data()) x = rng.uniform(-bound, bound);
  return m;
}

RetrieverParams init_params(const EncoderConfig& cfg, std::uint64_t seed) {
  RetrieverParams p;
  p.phi = random_matrix(cfg.d_in, cfg.d_out, seed);
  p.psi = p.phi;
  return p;
}

Embedding embed(const DenseMatrix& matrix, const SparseVector& fv) {
  if (fv.dim != matrix.rows()) {
    throw InvariantError(
        fmt::format("feature dim {} does not match matrix rows {}", fv.dim, matrix.rows()));
  }
  Embedding e;
  e.values.assign(matrix.cols(), 0.0);
  embed_accumulate(matrix, fv, 1.0, e.values);
  return e;
}

void embed_accumulate(const DenseMatrix& matrix, const SparseVector& v, double scale,
                      std::span<double> out) {
  const std::size_t cols = matrix.cols();
  for (std::size_t k = 0; k < v.indices.size(); ++k) {
    const double w = scale * v.values[k];
    const auto row = matrix.row(v.indices[k]);
    for (std::size_t c = 0; c < cols; ++c) out[c] += w * row[c];
  }
}

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double similarity(const Embedding& u, const Embedding& v) {
  if (u.size() != v.size()) {
    throw InvariantError(fmt::format("embedding length mismatch: {} vs {}", u.size(), v.size()));
  }
  return dot(u.values, v.values);
}

Embedding mean_bank_embedding(const ExampleBank& bank, const DenseMatrix& reference,
                              const EncoderConfig& cfg) {
  if (bank.empty()) throw DataError(fmt::format("bank '{}' is empty", bank.language));
  Embedding mean;
  mean.values.assign(reference.cols(), 0.0);
  for (const auto* part : {&bank.positives, &bank.negatives}) {
    for (const auto& t : *part) {
      embed_accumulate(reference, featurize(t.query + " " + t.response, cfg), 1.0, mean.values);
    }
  }
  const double n = static_cast<double>(bank.size());
  for (double& x : mean.values) x /= n;
  return mean;
}

std::string serialize_params(const RetrieverParams& params) {
  if (params.phi.rows() != params.psi.rows() || params.phi.cols() != params.psi.cols()) {
    throw InvariantError("phi and psi shapes differ");
  }
  std::string out;
  out.reserve(kParamsHeaderSize + 16 * params.phi.data().size());
  out.append(kParamsMagic, 4);
  put_u32(out, kParamsVersion);
  put_u64(out, params.d_in());
  put_u64(out, params.d_out());
  for (const auto* m : {&params.phi, &params.psi}) {
    if constexpr (std::endian::native == std::endian::little) {
      out.append(reinterpret_cast<const char*>(m->data().data()), 8 * m->data().size());
    } else {
      for (double x : m->data()) put_u64(out, std::bit_cast<std::uint64_t>(x));
    }
  }
  return out;
}

RetrieverParams deserialize_params(std::string_view bytes) {
  if (bytes.size() < kParamsHeaderSize) throw DataError("params: truncated header");
  if (std::memcmp(bytes.data(), kParamsMagic, 4) != 0) throw DataError("params: bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto version = static_cast<std::uint32_t>(get_u64(p + 4, 4));
  if (version != kParamsVersion) {
    throw DataError(fmt::format("params: unsupported version {}", version));
  }
  const std::uint64_t d_in = get_u64(p + 8, 8);
  const std::uint64_t d_out = get_u64(p + 16, 8);
  if (d_in == 0 || d_out == 0 || d_in > (std::uint64_t{1} << 32) || d_out > (1u << 20)) {
    throw DataError("params: corrupt shape");
  }
  const std::uint64_t count = d_in * d_out;
  if (bytes.size() != kParamsHeaderSize + 2 * 8 * count) {
    throw DataError(fmt::format("params: payload is {} bytes, expected {}",
                                bytes.size() - kParamsHeaderSize, 2 * 8 * count));
  }
  RetrieverParams params{DenseMatrix(d_in, d_out), DenseMatrix(d_in, d_out)};
  const unsigned char* cursor = p + kParamsHeaderSize;
  for (auto* m : {&params.phi, &params.psi}) {
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(m->data().data(), cursor, 8 * count);
      cursor += 8 * count;
    } else {
      for (double& x : m->data()) {
        x = std::bit_cast<double>(get_u64(cursor, 8));
        cursor += 8;
      }
    }
    for (double x : m->data()) {
      if (!std::isfinite(x)) throw DataError("params: non-finite entry");
    }
  }
  return params;
}

void save_params(const RetrieverParams& params, const std::filesystem::path& path) {
  write_file(path, serialize_params(params));
}

RetrieverParams load_params(const std::filesystem::path& path) {
  try {
    return deserialize_params(read_file(path));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace relic
