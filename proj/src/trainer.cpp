#include "spectrain/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "spectrain/errors.hpp"
#include "spectrain/kernels.hpp"
#include "spectrain/rng.hpp"

namespace spectrain {

namespace {

constexpr std::uint64_t kSplitStream = 0x53504c4954ULL;
constexpr std::uint64_t kProxyStream = 0x50524f5859ULL;

double sigmoid(double p) {
  if (p >= 0.0) return 1.0 / (1.0 + std::exp(-p));
  const double e = std::exp(p);
  return e / (1.0 + e);
}

double softplus(double p) { return std::max(p, 0.0) + std::log1p(std::exp(-std::abs(p))); }

double largest_eigenvalue(const Matrix& a) { return jacobi_eigen(a).values.front(); }

/// Walks a stage's samples in epoch-wise shuffled minibatches.
class BatchCursor {
 public:
  BatchCursor(const StageData& data, const TrainConfig& config, std::uint64_t stream)
      : data_(data), config_(config), stream_(stream) {}

  /// Returns the batch for the next step; full-batch GD returns the stage itself.
  std::pair<const Matrix*, std::span<const double>> next() {
    const std::size_t n = data_.x.rows();
    if (config_.optimizer == Optimizer::gd || config_.batch_size >= n) {
      return {&data_.x, std::span<const double>(data_.y)};
    }
    if (order_.empty() || pos_ >= n) {
      order_ = permutation(n, config_.seed, (stream_ << 24) ^ epoch_);
      ++epoch_;
      pos_ = 0;
    }
    const std::size_t m = std::min(config_.batch_size, n - pos_);
    const std::size_t k = data_.x.cols();
    xb_ = Matrix(m, k);
    yb_.assign(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t src = order_[pos_ + r];
      std::copy_n(data_.x.row(src).begin(), k, xb_.row(r).begin());
      yb_[r] = data_.y[src];
    }
    pos_ += m;
    return {&xb_, std::span<const double>(yb_)};
  }

 private:
  const StageData& data_;
  const TrainConfig& config_;
  std::uint64_t stream_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  Matrix xb_;
  std::vector<double> yb_;
};

}  // namespace

Backbone parse_backbone(const std::string& s) {
  if (s == "ridge") return Backbone::ridge;
  if (s == "logistic") return Backbone::logistic;
  throw ArgumentError("unknown backbone '" + s + "' (expected ridge or logistic)");
}

std::string to_string(Backbone b) { return b == Backbone::ridge ? "ridge" : "logistic"; }

Optimizer parse_optimizer(const std::string& s) {
  if (s == "gd") return Optimizer::gd;
  if (s == "sgd") return Optimizer::sgd;
  throw ArgumentError("unknown optimizer '" + s + "' (expected gd or sgd)");
}

std::string to_string(Optimizer o) { return o == Optimizer::gd ? "gd" : "sgd"; }

void ConvexModel::validate() const {
  if (!(ridge >= 0.0)) throw ArgumentError("model: ridge must be >= 0");
  if (!std::isfinite(bias) || !std::all_of(w.begin(), w.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericError("model: non-finite weights");
  }
}

LossGrad loss_and_grad(const ConvexModel& model, const Matrix& x, std::span<const double> y) {
  const std::size_t m = x.rows();
  const std::size_t k = model.dims();
  if (x.cols() != k) {
    throw ArgumentError("loss_and_grad: batch has " + std::to_string(x.cols()) +
                        " columns, model has " + std::to_string(k) + " weights");
  }
  if (y.size() != m) throw ArgumentError("loss_and_grad: label count != batch rows");
  if (m == 0) throw ArgumentError("loss_and_grad: empty batch");

  std::vector<double> r(m);
  double data_loss = 0.0;
  if (model.kind == Backbone::ridge) {
    kernels::linear_residuals(x, model.w, model.bias, y, r);
    for (double v : r) data_loss += 0.5 * v * v;
  } else {
    const std::vector<double> zeros(m, 0.0);
    kernels::linear_residuals(x, model.w, model.bias, zeros, r);
    for (std::size_t i = 0; i < m; ++i) {
      const double p = r[i];
      data_loss += softplus(p) - y[i] * p;
      r[i] = sigmoid(p) - y[i];
    }
  }
  data_loss /= static_cast<double>(m);

  LossGrad out;
  out.grad.assign(k + 1, 0.0);
  kernels::scaled_transpose_product(x, r, std::span<double>(out.grad.data(), k));
  double wsq = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    out.grad[j] += model.ridge * model.w[j];
    wsq += model.w[j] * model.w[j];
  }
  double rsum = 0.0;
  for (double v : r) rsum += v;
  out.grad[k] = rsum / static_cast<double>(m);
  out.loss = data_loss + 0.5 * model.ridge * wsq;
  return out;
}

void sgd_step(ConvexModel& model, const Matrix& x, std::span<const double> y, double lr) {
  const LossGrad lg = loss_and_grad(model, x, y);
  for (double g : lg.grad) {
    if (!std::isfinite(g)) throw NumericError("sgd_step: non-finite gradient");
  }
  const std::size_t k = model.dims();
  for (std::size_t j = 0; j < k; ++j) model.w[j] -= lr * lg.grad[j];
  model.bias -= lr * lg.grad[k];
}

std::vector<double> expand_weights(std::span<const double> w, std::size_t k_new) {
  if (k_new < w.size()) throw ArgumentError("expand_weights: k_new is smaller than the current k");
  std::vector<double> out(k_new, 0.0);
  std::copy(w.begin(), w.end(), out.begin());
  return out;
}

void expand_model(ConvexModel& model, std::size_t k_new) { model.w = expand_weights(model.w, k_new); }

TrainingData::TrainingData(const LabeledCube& scene, const DataOptions& options) : options_(options) {
  const HsiCube& cube = scene.cube;
  if (scene.num_classes != 2) {
    throw ArgumentError("trainer: the convex backbones are binary; got " +
                        std::to_string(scene.num_classes) + " classes");
  }
  if (cube.height() != cube.width()) throw ArgumentError("trainer: cube must be square (H == W)");
  if (!(options.validation_fraction > 0.0 && options.validation_fraction < 1.0)) {
    throw ArgumentError("trainer: validation fraction must be in (0, 1)");
  }
  if (!(options.ridge_factor > 0.0)) throw ArgumentError("trainer: ridge factor must be > 0");
  side_ = cube.height();
  const std::size_t n = cube.pixels();
  const std::size_t d = cube.bands();
  if (scene.labels.size() != n) throw ArgumentError("trainer: label count != pixel count");

  labels_.resize(n);
  is_train_.assign(n, true);
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (scene.labels[i] == c) members.push_back(i);
    }
    const auto perm = permutation(members.size(), options.seed, kSplitStream + static_cast<std::uint64_t>(c));
    const auto n_val = static_cast<std::size_t>(std::floor(options.validation_fraction * static_cast<double>(members.size())));
    for (std::size_t j = 0; j < n_val; ++j) is_train_[members[perm[j]]] = false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (scene.labels[i] != 0 && scene.labels[i] != 1) throw DataError("trainer: label outside {0, 1}");
    labels_[i] = scene.labels[i];
    (is_train_[i] ? train_ : validation_).push_back(i);
  }
  if (train_.size() < 2 || validation_.empty()) throw DataError("trainer: scene too small to split");

  const Matrix all = flatten(cube);
  Matrix xt(train_.size(), d);
  for (std::size_t r = 0; r < train_.size(); ++r) {
    std::copy_n(all.row(train_[r]).begin(), d, xt.row(r).begin());
  }
  basis_ = fit_pca(xt);
  if (!(basis_.eigvals.front() > 0.0)) throw DataError("trainer: training pixels have zero variance");
  ridge_ = options.ridge_factor * basis_.eigvals.front();
  coords_ = ChannelStack{side_, side_, d, project(basis_, all, d).data()};
  native_ = stage_data(d, side_);

  // Second-moment matrix of [z, 1] over the training split.
  const std::size_t m = train_.size();
  const Matrix& z = native_.x;
  const std::vector<double> zero_mean(d, 0.0);
  const Matrix gram = kernels::centered_gram(z, zero_mean);
  Matrix a0(d + 1, d + 1);
  std::vector<double> zbar(d, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < d; ++j) zbar[j] += z(r, j);
  for (std::size_t i = 0; i < d; ++i) {
    zbar[i] /= static_cast<double>(m);
    for (std::size_t j = 0; j < d; ++j) a0(i, j) = gram(i, j) / static_cast<double>(m);
    a0(i, d) = zbar[i];
    a0(d, i) = zbar[i];
  }
  a0(d, d) = 1.0;

  if (options.backbone == Backbone::ridge) {
    hessian_ = a0;
    for (std::size_t i = 0; i < d; ++i) hessian_(i, i) += ridge_;
    std::vector<double> rhs(d + 1, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t j = 0; j < d; ++j) rhs[j] += z(r, j) * native_.y[r];
      rhs[d] += native_.y[r];
    }
    for (double& v : rhs) v /= static_cast<double>(m);
    theta_star_ = cholesky_solve(hessian_, rhs);
    const auto eig = jacobi_eigen(hessian_);
    l_smooth_ = eig.values.front();
    mu_ = eig.values.back();
  } else {
    Matrix bound = a0;
    for (double& v : bound.data()) v *= 0.25;
    for (std::size_t i = 0; i < d; ++i) bound(i, i) += ridge_;
    l_smooth_ = largest_eigenvalue(bound);
    mu_ = ridge_;
    // Newton's method on the strictly convex logistic objective.
    theta_star_.assign(d + 1, 0.0);
    ConvexModel probe = zero_model(d);
    for (int it = 0; it < 100; ++it) {
      std::copy_n(theta_star_.begin(), d, probe.w.begin());
      probe.bias = theta_star_[d];
      const LossGrad lg = loss_and_grad(probe, z, native_.y);
      Matrix h(d + 1, d + 1);
      std::vector<double> p(m);
      kernels::linear_residuals(z, probe.w, probe.bias, std::vector<double>(m, 0.0), p);
      for (std::size_t r = 0; r < m; ++r) {
        const double s = sigmoid(p[r]);
        const double wgt = s * (1.0 - s) / static_cast<double>(m);
        for (std::size_t i = 0; i <= d; ++i) {
          const double zi = i < d ? z(r, i) : 1.0;
          if (zi == 0.0) continue;
          for (std::size_t j = 0; j <= i; ++j) h(i, j) += wgt * zi * (j < d ? z(r, j) : 1.0);
        }
      }
      for (std::size_t i = 0; i <= d; ++i)
        for (std::size_t j = 0; j < i; ++j) h(j, i) = h(i, j);
      for (std::size_t i = 0; i < d; ++i) h(i, i) += ridge_;
      // The bias direction can be flat on separable data; a tiny damping
      // keeps the system positive definite without moving the optimum.
      h(d, d) += 1e-12;
      const auto step = cholesky_solve(h, lg.grad);
      double step_norm = 0.0, theta_norm = 0.0;
      for (std::size_t i = 0; i <= d; ++i) {
        theta_star_[i] -= step[i];
        step_norm = std::max(step_norm, std::abs(step[i]));
        theta_norm = std::max(theta_norm, std::abs(theta_star_[i]));
      }
      if (step_norm <= 1e-13 * (1.0 + theta_norm)) break;
    }
  }
  ConvexModel best = zero_model(d);
  std::copy_n(theta_star_.begin(), d, best.w.begin());
  best.bias = theta_star_[d];
  loss_star_ = loss_and_grad(best, native_.x, native_.y).loss;
}

ConvexModel TrainingData::zero_model(std::size_t k) const {
  ConvexModel m;
  m.kind = options_.backbone;
  m.w.assign(k, 0.0);
  m.ridge = ridge_;
  return m;
}

StageData TrainingData::stage_data(std::size_t k, std::size_t b) const {
  const std::size_t d = bands();
  if (k < 1 || k > d) throw ArgumentError("stage_data: k must be in [1, D]");
  if (b < 1) throw ArgumentError("stage_data: spatial size must be >= 1");
  if (b > side_) throw ArgumentError("stage_data: spatial size exceeds the native size");
  StageData s;
  s.k = k;
  s.b = b;
  if (b == side_) {
    s.x = Matrix(train_.size(), k);
    s.y.resize(train_.size());
    for (std::size_t r = 0; r < train_.size(); ++r) {
      const std::size_t src = train_[r];
      std::copy_n(coords_.values.begin() + static_cast<std::ptrdiff_t>(src * d), k, s.x.row(r).begin());
      s.y[r] = labels_[src];
    }
    return s;
  }
  ChannelStack lead{side_, side_, k, std::vector<double>(side_ * side_ * k)};
  for (std::size_t p = 0; p < side_ * side_; ++p) {
    std::copy_n(coords_.values.begin() + static_cast<std::ptrdiff_t>(p * d), k,
                lead.values.begin() + static_cast<std::ptrdiff_t>(p * k));
  }
  const ChannelStack small = resize_stack(lead, b);
  const auto pos = resize_positions(side_, b);
  std::vector<std::size_t> rows;
  std::vector<std::size_t> sources;
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      const std::size_t src = pos[i] * side_ + pos[j];
      if (is_train_[src]) {
        rows.push_back(i * b + j);
        sources.push_back(src);
      }
    }
  if (rows.empty()) throw DataError("stage_data: no training pixels at spatial size " + std::to_string(b));
  s.x = Matrix(rows.size(), k);
  s.y.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(small.values.begin() + static_cast<std::ptrdiff_t>(rows[r] * k), k, s.x.row(r).begin());
    s.y[r] = labels_[sources[r]];
  }
  return s;
}

double TrainingData::full_loss(const ConvexModel& model) const {
  if (model.dims() > bands()) throw ArgumentError("full_loss: model has more weights than bands");
  if (options_.backbone == Backbone::ridge && model.kind == Backbone::ridge && model.ridge == ridge_) {
    return loss_star_ + loss_gap(model);
  }
  ConvexModel full = model;
  expand_model(full, bands());
  return loss_and_grad(full, native_.x, native_.y).loss;
}

double TrainingData::loss_gap(const ConvexModel& model) const {
  const std::size_t d = bands();
  if (model.dims() > d) throw ArgumentError("loss_gap: model has more weights than bands");
  if (options_.backbone == Backbone::ridge) {
    std::vector<double> e(d + 1);
    for (std::size_t j = 0; j < d; ++j) e[j] = (j < model.dims() ? model.w[j] : 0.0) - theta_star_[j];
    e[d] = model.bias - theta_star_[d];
    const auto he = matvec(hessian_, e);
    return 0.5 * dot(e, he);
  }
  return std::max(0.0, full_loss(model) - loss_star_);
}

double TrainingData::validation_accuracy(const ConvexModel& model) const {
  const std::size_t d = bands();
  if (model.dims() > d) throw ArgumentError("validation_accuracy: model has more weights than bands");
  const double threshold = model.kind == Backbone::ridge ? 0.5 : 0.0;
  std::size_t correct = 0;
  for (std::size_t idx : validation_) {
    double p = model.bias;
    for (std::size_t j = 0; j < model.dims(); ++j) p += coords_.values[idx * d + j] * model.w[j];
    const double predicted = p > threshold ? 1.0 : 0.0;
    if (predicted == labels_[idx]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(validation_.size());
}

LrSchedule convex_lr_schedule(double smoothness, int total_epochs) {
  if (!(smoothness > 0.0)) throw ArgumentError("convex_lr_schedule: smoothness must be > 0");
  return LrSchedule::constant(1.0 / smoothness, std::max(1, total_epochs));
}

long long steps_per_epoch(const TrainConfig& config, std::size_t samples) {
  if (config.batch_size < 1) throw ArgumentError("train config: batch size must be >= 1");
  if (config.optimizer == Optimizer::gd) return 1;
  return static_cast<long long>((samples + config.batch_size - 1) / config.batch_size);
}

long long fine_tune(ConvexModel& model, const StageData& stage, int epochs, double lr,
                    const TrainConfig& config, std::uint64_t stream) {
  if (epochs < 0) throw ArgumentError("fine_tune: epochs must be >= 0");
  if (stage.x.cols() < model.dims()) throw ArgumentError("fine_tune: stage has fewer components than the model");
  expand_model(model, stage.x.cols());
  const long long steps = static_cast<long long>(epochs) * steps_per_epoch(config, stage.x.rows());
  BatchCursor cursor(stage, config, stream);
  for (long long s = 0; s < steps; ++s) {
    const auto [x, y] = cursor.next();
    sgd_step(model, *x, y, lr);
  }
  return steps;
}

namespace {

struct StageRun {
  int index;
  std::size_t k;
  std::size_t b;
  long long steps;
  int n_stages;
};

void run_stage(const TrainingData& data, const TrainConfig& config, const StageRun& st,
               ConvexModel& model, TrainTrace& trace, double& cost, long long& step,
               std::chrono::steady_clock::time_point start) {
  expand_model(model, st.k);
  const StageData sd = data.stage_data(st.k, st.b);
  BatchCursor cursor(sd, config, static_cast<std::uint64_t>(st.index));
  const double ratio = static_cast<double>(st.b) / static_cast<double>(data.side());
  const double per_step = step_cost(config.cost, static_cast<double>(st.k)) * ratio * ratio;
  for (long long s = 0; s < st.steps; ++s) {
    const double t = (static_cast<double>(st.index - 1) +
                      static_cast<double>(s + 1) / static_cast<double>(st.steps)) /
                     static_cast<double>(st.n_stages);
    const double lr = lr_at(config.lr, std::min(1.0, t));
    const auto [x, y] = cursor.next();
    sgd_step(model, *x, y, lr);
    cost += per_step;
    ++step;
    TraceRecord rec;
    rec.step = step;
    rec.stage = st.index;
    rec.k = st.k;
    rec.b = st.b;
    rec.loss = data.full_loss(model);
    rec.loss_gap = data.loss_gap(model);
    rec.sim_cost = cost;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    trace.records.push_back(rec);
  }
}

}  // namespace

TrainTrace run_baseline(const TrainingData& data, int epochs, const TrainConfig& config) {
  if (epochs < 0) throw ArgumentError("run_baseline: epochs must be >= 0");
  config.cost.validate();
  TrainTrace trace;
  ConvexModel model = data.zero_model(data.bands());
  const long long steps = static_cast<long long>(epochs) * steps_per_epoch(config, data.train_count());
  double cost = 0.0;
  long long step = 0;
  const auto start = std::chrono::steady_clock::now();
  if (steps > 0) {
    run_stage(data, config, {1, data.bands(), data.side(), steps, 1}, model, trace, cost, step, start);
  }
  trace.final_accuracy = data.validation_accuracy(model);
  trace.model = std::move(model);
  return trace;
}

TrainTrace run_spectral_train(SchedulePlan plan, const TrainingData& data, const TrainConfig& config) {
  plan.validate();
  config.cost.validate();
  if (static_cast<std::size_t>(plan.b0) != data.side()) {
    throw ArgumentError("plan/cube mismatch: field b0 = " + std::to_string(plan.b0) +
                        ", cube side = " + std::to_string(data.side()));
  }
  if (static_cast<std::size_t>(plan.d) != data.bands()) {
    throw ArgumentError("plan/cube mismatch: field d = " + std::to_string(plan.d) +
                        ", cube bands = " + std::to_string(data.bands()));
  }
  const long long spe = steps_per_epoch(config, data.train_count());
  if (plan.steps_per_epoch != spe) {
    throw ArgumentError("plan/config mismatch: field steps_per_epoch = " +
                        std::to_string(plan.steps_per_epoch) + ", training uses " + std::to_string(spe));
  }

  TrainTrace trace;
  ConvexModel model = data.zero_model(0);
  double cost = 0.0;
  long long step = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const CurriculumStage& stage = plan.stages[i];
    const auto k = static_cast<std::size_t>(stage.k);
    if (stage.candidates.size() > 1) {
      const double lr = lr_at(config.lr, 0.5 * (stage.lr_lo + stage.lr_hi));
      const auto proxy = [&](int b) {
        ConvexModel trial = model;
        const StageData sd = data.stage_data(k, static_cast<std::size_t>(b));
        const long long taken = fine_tune(trial, sd, plan.t_ft, lr, config,
                                          kProxyStream + static_cast<std::uint64_t>(stage.index));
        const double ratio = static_cast<double>(b) / static_cast<double>(data.side());
        const double charged = static_cast<double>(taken) * step_cost(config.cost, static_cast<double>(k)) * ratio * ratio;
        trace.proxy_cost += charged;
        cost += charged;
        return data.validation_accuracy(trial);
      };
      const OrderSearchResult found = order_search(stage.candidates, proxy);
      set_stage_resolution(plan, i, found.chosen);
      trace.choices.push_back({stage.index, found.chosen, stage.candidates, found.scores});
    }
    run_stage(data, config,
              {stage.index, k, static_cast<std::size_t>(plan.stages[i].b), plan.stages[i].steps, plan.n_stages},
              model, trace, cost, step, start);
  }
  trace.final_accuracy = data.validation_accuracy(model);
  trace.model = std::move(model);
  return trace;
}

SchedulePlan default_plan(const TrainingData& data, const TrainConfig& config, int t0, double beta,
                          int n_stages, double eta, std::vector<std::vector<int>> candidates) {
  PlanRequest req;
  req.t0 = t0;
  req.beta = beta;
  req.n_stages = n_stages;
  req.b0 = static_cast<int>(data.side());
  req.d = static_cast<int>(data.bands());
  req.k1 = static_cast<int>(select_k(data.basis(), eta));
  if (candidates.empty()) {
    candidates.assign(static_cast<std::size_t>(std::max(0, n_stages)), std::vector<int>{req.b0});
  }
  req.b_candidates = std::move(candidates);
  req.steps_per_epoch = steps_per_epoch(config, data.train_count());
  req.t_ft = 1;
  return plan_schedule(req);
}

std::optional<double> cost_to_gap(const TrainTrace& trace, double threshold) {
  for (const auto& r : trace.records) {
    if (r.loss_gap <= threshold) return r.sim_cost;
  }
  return std::nullopt;
}

std::optional<long long> steps_to_gap(const TrainTrace& trace, double threshold) {
  for (const auto& r : trace.records) {
    if (r.loss_gap <= threshold) return r.step;
  }
  return std::nullopt;
}

void write_trace_csv(const TrainTrace& trace, std::ostream& os, bool include_wall) {
  os << "step,stage,k,b,loss,loss_gap,sim_cost" << (include_wall ? ",wall_ms" : "") << '\n';
  char buf[256];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%lld,%d,%zu,%zu,%.17g,%.17g,%.17g", r.step, r.stage, r.k, r.b,
                  r.loss, r.loss_gap, r.sim_cost);
    os << buf;
    if (include_wall) {
      std::snprintf(buf, sizeof buf, ",%.3f", r.wall_ms);
      os << buf;
    }
    os << '\n';
  }
}

TrainTrace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("trace CSV: empty input");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) header.push_back(col);
  }
  const std::vector<std::string> required = {"step", "stage", "k", "b", "loss", "loss_gap", "sim_cost"};
  std::vector<int> where(required.size(), -1);
  int wall = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    for (std::size_t r = 0; r < required.size(); ++r) {
      if (header[c] == required[r]) where[r] = static_cast<int>(c);
    }
    if (header[c] == "wall_ms") wall = static_cast<int>(c);
  }
  for (std::size_t r = 0; r < required.size(); ++r) {
    if (where[r] < 0) throw FormatError("trace CSV: missing column " + required[r]);
  }
  TrainTrace trace;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw FormatError("trace CSV: line " + std::to_string(lineno) + " has " +
                        std::to_string(cells.size()) + " cells, expected " + std::to_string(header.size()));
    }
    try {
      TraceRecord rec;
      rec.step = std::stoll(cells[static_cast<std::size_t>(where[0])]);
      rec.stage = std::stoi(cells[static_cast<std::size_t>(where[1])]);
      rec.k = std::stoul(cells[static_cast<std::size_t>(where[2])]);
      rec.b = std::stoul(cells[static_cast<std::size_t>(where[3])]);
      rec.loss = std::stod(cells[static_cast<std::size_t>(where[4])]);
      rec.loss_gap = std::stod(cells[static_cast<std::size_t>(where[5])]);
      rec.sim_cost = std::stod(cells[static_cast<std::size_t>(where[6])]);
      if (wall >= 0) rec.wall_ms = std::stod(cells[static_cast<std::size_t>(wall)]);
      trace.records.push_back(rec);
    } catch (const std::logic_error&) {
      throw FormatError("trace CSV: unparsable value on line " + std::to_string(lineno));
    }
  }
  return trace;
}

}  // namespace spectrain
