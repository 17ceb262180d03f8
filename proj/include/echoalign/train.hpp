#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "echoalign/dataset.hpp"
#include "echoalign/modifier.hpp"
#include "echoalign/noise.hpp"
#include "echoalign/selection.hpp"

namespace echoalign {

/// Mini-batch SGD with momentum, weight decay and step decay.
struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 200;
  std::vector<std::size_t> lr_decay_epochs{100, 150};
  double lr_decay_factor = 0.1;
  std::uint64_t seed = 0;

  /// Checks ranges and that every decay epoch is < epochs. The batch-size
  /// bound depends on the data and is checked by train_classifier.
  void validate() const;
  /// Learning rate in effect during 0-based `epoch`.
  double learning_rate_at(std::size_t epoch) const;
};

/// Multinomial logistic regression: logits = W x + b, W is C x D row-major.
struct SoftmaxModel {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  static SoftmaxModel zeros(std::size_t classes, std::size_t dim);
  std::vector<double> logits(std::span<const double> x) const;
  /// argmax of the logits; ties go to the lowest class index.
  ClassIndex predict(std::span<const double> x) const;
  bool operator==(const SoftmaxModel&) const = default;
};

enum class LabelSource { noisy, truth };

struct LossGradient {
  double loss = 0.0;  ///< mean cross-entropy over the rows
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;
};

/// Mean cross-entropy of `rows` of `data` and its gradient, without weight
/// decay. Labels come from the noisy or true column.
LossGradient softmax_cross_entropy(const SoftmaxModel& model, const Dataset& data,
                                   std::span<const std::size_t> rows, LabelSource labels);

/// Mean cross-entropy over a whole dataset.
double dataset_loss(const SoftmaxModel& model, const Dataset& data, LabelSource labels);

/// Fraction of `data` whose prediction equals the true label.
double accuracy(const SoftmaxModel& model, const Dataset& data);

struct EvalReport {
  double test_accuracy = 0.0;
  std::vector<double> train_loss_curve;  ///< noisy-label loss on the training set, end of each epoch
  std::vector<double> test_loss_curve;   ///< true-label loss on the test set, end of each epoch
  std::optional<double> selection_accuracy;
  std::optional<std::size_t> num_selected;
};

struct TrainResult {
  SoftmaxModel model;
  EvalReport report;
};

/// Trains on the noisy labels of `train` and evaluates against the true
/// labels of `test`. Throws DomainError on an empty train set or a batch
/// larger than it, DivergenceError when a loss goes non-finite.
TrainResult train_classifier(const Dataset& train, const Dataset& test, const TrainConfig& config);

struct SelectionQuality {
  double selection_accuracy = 0.0;
  std::size_t num_selected = 0;
};

/// Clean fraction of Part 1 against `truth`. Throws EmptySelectionError on
/// an empty Part 1 and MismatchError on an unknown id.
SelectionQuality selection_quality(const SelectionResult& result, const Dataset& truth);

struct PipelineEvaluation {
  EvalReport refined;
  EvalReport baseline;
};

/// Generates the world and a held-out test set from the same prototypes,
/// injects noise, runs modify + select at `tau`, and trains one classifier
/// on the refined set and one on the raw noisy set with the same config.
PipelineEvaluation evaluate_pipeline(const SynthWorldSpec& world, const NoiseSpec& noise,
                                     const ModifierConfig& modifier, double tau, const TrainConfig& train);

/// epoch,train_loss,test_loss rows.
std::string format_loss_csv(const EvalReport& report);
/// key=value summary lines.
std::string format_eval_summary(const EvalReport& report);

}  // namespace echoalign
