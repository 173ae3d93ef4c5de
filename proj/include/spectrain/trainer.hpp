#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spectrain/analysis.hpp"
#include "spectrain/cube.hpp"
#include "spectrain/linalg.hpp"
#include "spectrain/schedule.hpp"
#include "spectrain/spatial.hpp"
#include "spectrain/spectral.hpp"

namespace spectrain {

enum class Backbone { ridge, logistic };
enum class Optimizer { gd, sgd };

Backbone parse_backbone(const std::string& s);
std::string to_string(Backbone b);
Optimizer parse_optimizer(const std::string& s);
std::string to_string(Optimizer o);

/// Linear model on the leading PCA coordinates; the bias is not regularized.
struct ConvexModel {
  Backbone kind = Backbone::ridge;
  std::vector<double> w;
  double bias = 0.0;
  double ridge = 0.0;

  std::size_t dims() const noexcept { return w.size(); }
  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // k weight components, then the bias
};

/// Regularized empirical risk on the batch and its exact gradient.
LossGrad loss_and_grad(const ConvexModel& model, const Matrix& x, std::span<const double> y);

/// w <- w - lr * grad. Throws NumericError on a non-finite gradient.
void sgd_step(ConvexModel& model, const Matrix& x, std::span<const double> y, double lr);

/// Zero-extends the weights to k_new coordinates.
std::vector<double> expand_weights(std::span<const double> w, std::size_t k_new);
void expand_model(ConvexModel& model, std::size_t k_new);

/// Samples at one (k, B) view of the training split.
struct StageData {
  Matrix x;
  std::vector<double> y;
  std::size_t k = 0;
  std::size_t b = 0;
};

struct DataOptions {
  Backbone backbone = Backbone::ridge;
  /// Ridge constant as a multiple of the top training eigenvalue.
  double ridge_factor = 0.1;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;
};

/// Split, PCA basis, full PC coordinates and the exact optimum of the
/// full-spectrum objective for one labeled scene.
class TrainingData {
 public:
  TrainingData(const LabeledCube& scene, const DataOptions& options);

  std::size_t side() const noexcept { return side_; }
  std::size_t bands() const noexcept { return basis_.dims(); }
  std::size_t train_count() const noexcept { return train_.size(); }
  const std::vector<std::size_t>& train_indices() const noexcept { return train_; }
  const std::vector<std::size_t>& validation_indices() const noexcept { return validation_; }
  const SpectralBasis& basis() const noexcept { return basis_; }
  Backbone backbone() const noexcept { return options_.backbone; }
  double ridge() const noexcept { return ridge_; }
  /// Smoothness and strong convexity of the full-spectrum objective.
  double smoothness() const noexcept { return l_smooth_; }
  double strong_convexity() const noexcept { return mu_; }
  double optimal_loss() const noexcept { return loss_star_; }
  const std::vector<double>& optimum() const noexcept { return theta_star_; }

  /// View at k components and spatial size b (b = side() is native).
  StageData stage_data(std::size_t k, std::size_t b) const;
  /// Full training objective of a model with k <= D weights.
  double full_loss(const ConvexModel& model) const;
  /// full_loss - optimal_loss; exact quadratic form for the ridge backbone.
  double loss_gap(const ConvexModel& model) const;
  /// Accuracy on the validation pixels at native resolution, in [0, 1].
  double validation_accuracy(const ConvexModel& model) const;
  ConvexModel zero_model(std::size_t k) const;

 private:
  DataOptions options_;
  std::size_t side_ = 0;
  SpectralBasis basis_;
  ChannelStack coords_;  // full PC coordinates, D channels
  std::vector<double> labels_;
  std::vector<std::size_t> train_;
  std::vector<std::size_t> validation_;
  std::vector<bool> is_train_;
  double ridge_ = 0.0;
  Matrix hessian_;  // (D+1)^2 Hessian of the ridge objective
  std::vector<double> theta_star_;
  double loss_star_ = 0.0;
  double l_smooth_ = 0.0;
  double mu_ = 0.0;
  StageData native_;
};

struct TrainConfig {
  Optimizer optimizer = Optimizer::gd;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  LrSchedule lr;
  CostModel cost;
};

/// Constant step 1/L, the largest step with monotone full-batch descent.
LrSchedule convex_lr_schedule(double smoothness, int total_epochs);

/// Optimizer steps in one pass over `samples` examples.
long long steps_per_epoch(const TrainConfig& config, std::size_t samples);

/// Runs T_ft epochs of steps on `stage` at constant lr after zero-extending
/// the weights to the stage dimension. Returns the number of steps taken.
long long fine_tune(ConvexModel& model, const StageData& stage, int epochs, double lr,
                    const TrainConfig& config, std::uint64_t stream);

struct TraceRecord {
  long long step = 0;
  int stage = 0;
  std::size_t k = 0;
  std::size_t b = 0;
  double loss = 0.0;
  double loss_gap = 0.0;
  double sim_cost = 0.0;
  double wall_ms = 0.0;
};

struct StageChoice {
  int stage = 0;
  int chosen_b = 0;
  std::vector<int> candidates;
  std::vector<double> proxy_scores;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  double final_accuracy = 0.0;
  std::vector<StageChoice> choices;
  double proxy_cost = 0.0;
  ConvexModel model;
};

TrainTrace run_baseline(const TrainingData& data, int epochs, const TrainConfig& config);

/// Executes the curriculum. Stages with several candidate resolutions are
/// resolved by order search, each candidate scored by the validation
/// accuracy after a T_ft-epoch proxy fine-tune from the current weights; the
/// proxy compute is charged to the run's simulated cost.
TrainTrace run_spectral_train(SchedulePlan plan, const TrainingData& data,
                              const TrainConfig& config);

/// Stage count N, budget ratio beta, k1 = select_k(eta) and the native size
/// for every stage unless `candidates` overrides it.
SchedulePlan default_plan(const TrainingData& data, const TrainConfig& config, int t0,
                          double beta = 0.5, int n_stages = 3, double eta = 0.95,
                          std::vector<std::vector<int>> candidates = {});

/// Simulated cost at which the trace first reaches loss_gap <= threshold.
std::optional<double> cost_to_gap(const TrainTrace& trace, double threshold);
std::optional<long long> steps_to_gap(const TrainTrace& trace, double threshold);

void write_trace_csv(const TrainTrace& trace, std::ostream& os, bool include_wall = true);
TrainTrace read_trace_csv(std::istream& is);

}  // namespace spectrain
