#include "echoalign/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "echoalign/errors.hpp"
#include "echoalign/manifest.hpp"
#include "echoalign/rng.hpp"

namespace echoalign {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw DomainError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw DomainError("weight_decay must be >= 0");
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (!(lr_decay_factor > 0.0) || !std::isfinite(lr_decay_factor)) throw DomainError("lr_decay_factor must be > 0");
  for (std::size_t e : lr_decay_epochs) {
    if (e >= epochs) {
      throw DomainError("lr decay epoch " + std::to_string(e) + " is not below epochs=" + std::to_string(epochs));
    }
  }
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  double lr = learning_rate;
  for (std::size_t e : lr_decay_epochs) {
    if (epoch >= e) lr *= lr_decay_factor;
  }
  return lr;
}

SoftmaxModel SoftmaxModel::zeros(std::size_t classes, std::size_t dim) {
  return SoftmaxModel{classes, dim, std::vector<double>(classes * dim, 0.0), std::vector<double>(classes, 0.0)};
}

std::vector<double> SoftmaxModel::logits(std::span<const double> x) const {
  std::vector<double> z(bias);
  for (std::size_t c = 0; c < classes; ++c) {
    const double* w = weights.data() + c * dim;
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += w[d] * x[d];
    z[c] += s;
  }
  return z;
}

ClassIndex SoftmaxModel::predict(std::span<const double> x) const {
  const auto z = logits(x);
  return static_cast<ClassIndex>(std::max_element(z.begin(), z.end()) - z.begin());
}

namespace {

ClassIndex label_of(const LabeledInstance& inst, LabelSource source) {
  if (source == LabelSource::noisy) return inst.noisy_label;
  if (!inst.true_label) throw DomainError("instance " + std::to_string(inst.id) + " has no true label");
  return *inst.true_label;
}

// Softmax probabilities in place; returns log-sum-exp of the input.
double softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : z) v /= s;
  return m + std::log(s);
}

}  // namespace

LossGradient softmax_cross_entropy(const SoftmaxModel& model, const Dataset& data,
                                   std::span<const std::size_t> rows, LabelSource labels) {
  if (rows.empty()) throw DomainError("loss over zero rows");
  const std::size_t C = model.classes, D = model.dim;
  LossGradient out{0.0, std::vector<double>(C * D, 0.0), std::vector<double>(C, 0.0)};
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    const LabeledInstance& inst = data[r];
    const ClassIndex y = label_of(inst, labels);
    std::vector<double> p = model.logits(inst.features);
    const double logit_y = p[y];
    out.loss += softmax_inplace(p) - logit_y;
    p[y] -= 1.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double g = p[c] * inv_n;
      double* gw = out.grad_weights.data() + c * D;
      for (std::size_t d = 0; d < D; ++d) gw[d] += g * inst.features[d];
      out.grad_bias[c] += g;
    }
  }
  out.loss *= inv_n;
  return out;
}

double dataset_loss(const SoftmaxModel& model, const Dataset& data, LabelSource labels) {
  if (data.empty()) throw DomainError("loss over an empty dataset");
  double total = 0.0;
  for (const LabeledInstance& inst : data.instances()) {
    std::vector<double> z = model.logits(inst.features);
    const double logit_y = z[label_of(inst, labels)];
    total += softmax_inplace(z) - logit_y;
  }
  return total / static_cast<double>(data.size());
}

double accuracy(const SoftmaxModel& model, const Dataset& data) {
  if (data.empty()) throw DomainError("accuracy over an empty dataset");
  std::size_t hits = 0;
  for (const LabeledInstance& inst : data.instances()) {
    if (model.predict(inst.features) == label_of(inst, LabelSource::truth)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainResult train_classifier(const Dataset& train, const Dataset& test, const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw DomainError("training set is empty");
  if (test.empty()) throw DomainError("test set is empty");
  if (!test.with_truth()) throw DomainError("test set must carry true labels");
  if (train.num_classes() != test.num_classes() || train.dim() != test.dim()) {
    throw MismatchError("train and test disagree on C or D");
  }
  if (config.batch_size > train.size()) {
    throw DomainError("batch_size " + std::to_string(config.batch_size) + " exceeds training set size " +
                      std::to_string(train.size()));
  }

  const std::size_t n = train.size();
  SoftmaxModel model = SoftmaxModel::zeros(train.num_classes(), train.dim());
  std::vector<double> vel_w(model.weights.size(), 0.0), vel_b(model.bias.size(), 0.0);
  std::vector<std::size_t> order(n);
  TrainResult result{model, {}};

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Stream shuffle(config.seed, "train.shuffle", epoch);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);

    const double lr = config.learning_rate_at(epoch);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const auto g = softmax_cross_entropy(model, train, std::span(order).subspan(start, stop - start),
                                           LabelSource::noisy);
      // PyTorch-style SGD: v = mu*v + (grad + wd*w); w -= lr*v.
      for (std::size_t k = 0; k < model.weights.size(); ++k) {
        vel_w[k] = config.momentum * vel_w[k] + g.grad_weights[k] + config.weight_decay * model.weights[k];
        model.weights[k] -= lr * vel_w[k];
      }
      for (std::size_t k = 0; k < model.bias.size(); ++k) {
        vel_b[k] = config.momentum * vel_b[k] + g.grad_bias[k] + config.weight_decay * model.bias[k];
        model.bias[k] -= lr * vel_b[k];
      }
    }

    const double train_loss = dataset_loss(model, train, LabelSource::noisy);
    const double test_loss = dataset_loss(model, test, LabelSource::truth);
    if (!std::isfinite(train_loss) || !std::isfinite(test_loss)) {
      throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.report.train_loss_curve.push_back(train_loss);
    result.report.test_loss_curve.push_back(test_loss);
  }

  result.model = std::move(model);
  result.report.test_accuracy = accuracy(result.model, test);
  return result;
}

SelectionQuality selection_quality(const SelectionResult& result, const Dataset& truth) {
  if (result.retained_original_ids.empty()) {
    throw EmptySelectionError("Part 1 is empty; selection accuracy is undefined");
  }
  if (!truth.with_truth()) throw DomainError("truth dataset must carry true labels");
  std::size_t clean = 0;
  for (InstanceId id : result.retained_original_ids) {
    const auto pos = truth.find(id);
    if (!pos) throw MismatchError("id " + std::to_string(id) + " not found in truth dataset");
    const LabeledInstance& inst = truth[*pos];
    if (inst.noisy_label == *inst.true_label) ++clean;
  }
  const std::size_t n = result.retained_original_ids.size();
  return SelectionQuality{static_cast<double>(clean) / static_cast<double>(n), n};
}

PipelineEvaluation evaluate_pipeline(const SynthWorldSpec& world_spec, const NoiseSpec& noise,
                                     const ModifierConfig& modifier, double tau, const TrainConfig& train) {
  const World world = generate_world(world_spec);
  const Dataset test = sample_instances(world_spec, world.prototypes, 1);
  const Dataset noisy = inject_noise(world.dataset, noise);
  const auto pairs = modify(noisy, world.prototypes, modifier);
  const SelectionResult selection = select(pairs, tau, noisy);

  PipelineEvaluation out;
  out.refined = train_classifier(selection.refined, test, train).report;
  out.baseline = train_classifier(noisy, test, train).report;
  if (!selection.retained_original_ids.empty()) {
    const SelectionQuality q = selection_quality(selection, noisy);
    out.refined.selection_accuracy = q.selection_accuracy;
    out.refined.num_selected = q.num_selected;
  } else {
    out.refined.num_selected = 0;
  }
  return out;
}

std::string format_loss_csv(const EvalReport& report) {
  std::string out = "epoch,train_loss,test_loss\n";
  for (std::size_t e = 0; e < report.train_loss_curve.size(); ++e) {
    out += std::to_string(e) + "," + format_double(report.train_loss_curve[e]) + "," +
           format_double(report.test_loss_curve[e]) + "\n";
  }
  return out;
}

std::string format_eval_summary(const EvalReport& report) {
  std::string out = "test_accuracy=" + format_double(report.test_accuracy) + "\n";
  out += "epochs=" + std::to_string(report.train_loss_curve.size()) + "\n";
  if (!report.train_loss_curve.empty()) {
    out += "final_train_loss=" + format_double(report.train_loss_curve.back()) + "\n";
    out += "final_test_loss=" + format_double(report.test_loss_curve.back()) + "\n";
  }
  if (report.selection_accuracy) out += "selection_accuracy=" + format_double(*report.selection_accuracy) + "\n";
  if (report.num_selected) out += "num_selected=" + std::to_string(*report.num_selected) + "\n";
  return out;
}

}  // namespace echoalign
