#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowkit {

inline constexpr std::size_t kEmbeddingDim = 1024;

/// Sentence embedding: unit L2 norm, or all zeros for text without tokens.
struct Embedding {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool is_zero() const;
  double norm() const;
};

/// Cosine similarity; 0 when either side is the zero vector.
double cosine(std::span<const double> a, std::span<const double> b);
inline double cosine(const Embedding& a, const Embedding& b) { return cosine(a.values, b.values); }

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
};

/// Lowercases, splits on non-alphanumeric bytes (bytes >= 0x80 count as
/// alphanumeric so UTF-8 words stay whole), and counts each token's word
/// unigram plus its character trigrams in a hashed vector (FNV-1a 64 mod D),
/// then L2-normalizes.
class HashedNgramEmbedder final : public Embedder {
 public:
  explicit HashedNgramEmbedder(std::size_t dim = kEmbeddingDim) : dim_(dim) {}

  Embedding embed(std::string_view text) const override;
  std::size_t dimension() const override { return dim_; }

  static std::vector<std::string> tokenize(std::string_view text);
  /// Feature strings of one token: "w:<token>" then "c:<trigram>" for each trigram.
  static std::vector<std::string> features(const std::string& token);

 private:
  std::size_t dim_;
};

}  // namespace flowkit
