#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowkit/embedder.hpp"

namespace flowkit {

struct TrainingOptions {
  double learning_rate = 0.5;
  int epochs = 300;
  double l2 = 0.01;
};

/// Multinomial logistic regression over sentence embeddings.
class IntentClassifier {
 public:
  IntentClassifier() = default;
  IntentClassifier(std::vector<std::string> class_ids, std::size_t dim);

  const std::vector<std::string>& class_ids() const { return class_ids_; }
  std::size_t num_classes() const { return class_ids_.size(); }
  std::size_t dim() const { return dim_; }

  /// Row-major num_classes x dim.
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

  std::vector<double> logits(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  /// Index of the most probable class; lowest index wins ties.
  std::size_t predict(std::span<const double> x) const;

  /// Full-batch gradient descent from zero weights. `labels[i]` indexes
  /// class_ids. A single-class model stays constant (probability 1).
  static IntentClassifier train(std::vector<std::string> class_ids, const std::vector<Embedding>& inputs,
                                const std::vector<std::size_t>& labels, const TrainingOptions& options = {});

  nlohmann::json to_json() const;
  static IntentClassifier from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> class_ids_;
  std::size_t dim_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace flowkit
