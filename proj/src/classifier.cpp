#include "flowkit/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flowkit {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

IntentClassifier::IntentClassifier(std::vector<std::string> class_ids, std::size_t dim)
    : class_ids_(std::move(class_ids)), dim_(dim), weights_(class_ids_.size() * dim, 0.0), bias_(class_ids_.size(), 0.0) {}

std::vector<double> IntentClassifier::logits(std::span<const double> x) const {
  if (x.size() != dim_) throw std::invalid_argument("embedding dimension mismatch");
  std::vector<double> z(bias_);
  for (std::size_t k = 0; k < class_ids_.size(); ++k) {
    const double* row = weights_.data() + k * dim_;
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += row[i] * x[i];
    z[k] += s;
  }
  return z;
}

std::vector<double> IntentClassifier::predict_proba(std::span<const double> x) const { return softmax(logits(x)); }

std::size_t IntentClassifier::predict(std::span<const double> x) const {
  auto p = predict_proba(x);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

IntentClassifier IntentClassifier::train(std::vector<std::string> class_ids, const std::vector<Embedding>& inputs,
                                         const std::vector<std::size_t>& labels, const TrainingOptions& options) {
  if (class_ids.empty()) throw std::invalid_argument("classifier needs at least one class");
  if (inputs.size() != labels.size()) throw std::invalid_argument("inputs and labels differ in length");
  const std::size_t dim = inputs.empty() ? kEmbeddingDim : inputs.front().dim();
  IntentClassifier model(std::move(class_ids), dim);
  const std::size_t k = model.num_classes();
  if (k == 1 || inputs.empty()) return model;
  for (auto l : labels)
    if (l >= k) throw std::invalid_argument("label out of range");

  // Hashed embeddings are sparse; keep the non-zero coordinates only.
  struct Sparse {
    std::vector<std::size_t> idx;
    std::vector<double> val;
  };
  std::vector<Sparse> xs;
  xs.reserve(inputs.size());
  for (const auto& e : inputs) {
    if (e.dim() != dim) throw std::invalid_argument("embedding dimension mismatch");
    Sparse s;
    for (std::size_t i = 0; i < dim; ++i)
      if (e.values[i] != 0.0) {
        s.idx.push_back(i);
        s.val.push_back(e.values[i]);
      }
    xs.push_back(std::move(s));
  }

  const double inv_n = 1.0 / static_cast<double>(xs.size());
  std::vector<double> grad_w(k * dim), grad_b(k), z(k);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t n = 0; n < xs.size(); ++n) {
      const auto& x = xs[n];
      for (std::size_t c = 0; c < k; ++c) {
        double s = model.bias_[c];
        const double* row = model.weights_.data() + c * dim;
        for (std::size_t j = 0; j < x.idx.size(); ++j) s += row[x.idx[j]] * x.val[j];
        z[c] = s;
      }
      auto p = softmax(z);
      for (std::size_t c = 0; c < k; ++c) {
        double err = p[c] - (labels[n] == c ? 1.0 : 0.0);
        grad_b[c] += err * inv_n;
        double* grow = grad_w.data() + c * dim;
        for (std::size_t j = 0; j < x.idx.size(); ++j) grow[x.idx[j]] += err * x.val[j] * inv_n;
      }
    }
    for (std::size_t i = 0; i < model.weights_.size(); ++i)
      model.weights_[i] -= options.learning_rate * (grad_w[i] + options.l2 * model.weights_[i]);
    for (std::size_t c = 0; c < k; ++c) model.bias_[c] -= options.learning_rate * grad_b[c];
  }
  return model;
}

nlohmann::json IntentClassifier::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t c = 0; c < class_ids_.size(); ++c)
    rows.push_back(std::vector<double>(weights_.begin() + static_cast<long>(c * dim_),
                                       weights_.begin() + static_cast<long>((c + 1) * dim_)));
  return {{"classes", class_ids_}, {"dim", dim_}, {"weights", rows}, {"bias", bias_}};
}

IntentClassifier IntentClassifier::from_json(const nlohmann::json& j) {
  IntentClassifier m(j.at("classes").get<std::vector<std::string>>(), j.at("dim").get<std::size_t>());
  const auto& rows = j.at("weights");
  if (rows.size() != m.num_classes()) throw std::invalid_argument("weight rows do not match classes");
  for (std::size_t c = 0; c < rows.size(); ++c) {
    auto row = rows[c].get<std::vector<double>>();
    if (row.size() != m.dim_) throw std::invalid_argument("weight row has wrong dimension");
    std::copy(row.begin(), row.end(), m.weights_.begin() + static_cast<long>(c * m.dim_));
  }
  m.bias_ = j.at("bias").get<std::vector<double>>();
  if (m.bias_.size() != m.num_classes()) throw std::invalid_argument("bias does not match classes");
  return m;
}

}  // namespace flowkit
