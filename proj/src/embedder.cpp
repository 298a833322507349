#include "flowkit/embedder.hpp"

#include <cctype>
#include <cmath>

#include "flowkit/hash.hpp"

namespace flowkit {

bool Embedding::is_zero() const {
  for (double v : values)
    if (v != 0.0) return false;
  return true;
}

double Embedding::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::string> HashedNgramEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<std::string> HashedNgramEmbedder::features(const std::string& token) {
  std::vector<std::string> out{"w:" + token};
  for (std::size_t i = 0; i + 3 <= token.size(); ++i) out.push_back("c:" + token.substr(i, 3));
  return out;
}

Embedding HashedNgramEmbedder::embed(std::string_view text) const {
  Embedding e;
  e.values.assign(dim_, 0.0);
  for (const auto& tok : tokenize(text))
    for (const auto& f : features(tok)) e.values[fnv1a64(f) % dim_] += 1.0;
  double n = e.norm();
  if (n > 0.0)
    for (double& v : e.values) v /= n;
  return e;
}

}  // namespace flowkit
