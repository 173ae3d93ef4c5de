#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "spectrain/linalg.hpp"

namespace spectrain {

/// Per-step cost T_step(bands) = c0 + c1 * bands.
struct CostModel {
  double c0 = 0.0;
  double c1 = 1.0;
  void validate() const;
};

double step_cost(const CostModel& model, double bands);

/// (K / N) / d^2: data volume of a K-band, d-times downsampled step relative
/// to a full step.
double cost_factor(int k, int n, int d);

enum class LossKind { squared, general_convex };

struct ConditionReport {
  double kappa_full = 1.0;
  double kappa_k = 1.0;
  double mu_full = 0.0;
  double l_full = 0.0;
  double mu_k = 0.0;
  double l_k = 0.0;
  double rho_k = 0.0;
  double rho_full = 0.0;
};

/// L = L_phi * lambda_1 + ridge for both views; mu = lambda_last + ridge for
/// squared loss, ridge alone for general convex losses.
ConditionReport condition_numbers(std::span<const double> lambda, double ridge, double l_phi,
                                  std::size_t k, LossKind loss = LossKind::squared);

/// C_phi^2 * sum_{i<=K} lambda_i.
double sgd_variance_bound(std::span<const double> lambda, double c_phi, std::size_t k);

struct TimeBoundReport {
  double t1 = 0.0;
  double t2 = 0.0;
  double t_ours = 0.0;
  double t_base = 0.0;
  double win_margin = 0.0;
  double speedup = 1.0;
};

/// The first stage may also run at 1/d spatial resolution, which scales its
/// per-step cost by 1/d^2.
TimeBoundReport two_stage_bound(const ConditionReport& report, const CostModel& cost, int n, int k,
                                double delta0, double delta1, double eps, int d = 1);

struct BoundStage {
  int k = 0;
  double steps = 0.0;
  double kappa = 1.0;  // condition number of the stage's view
};

/// Early stages run `steps` at K_s with contraction exp(-1/kappa_s) per step;
/// the final full-spectrum stage runs until the gap reaches eps.
TimeBoundReport s_stage_bound(std::span<const BoundStage> stages, double kappa_full, int n,
                              const CostModel& cost, double delta0, double eps);

/// eps_bias + (sigma2 / M) * sum_i lambda_i / (lambda_i + ridge).
double bias_variance_bound(std::span<const double> lambda, double ridge, double sigma2,
                           double m, double eps_bias);

/// (m_a - m_b)^T P_K Sigma^{-1} P_K (m_a - m_b) with P_K = E_K E_K^T.
double subspace_mahalanobis(std::span<const double> m_a, std::span<const double> m_b,
                            const Matrix& sigma, const Matrix& basis, std::size_t k);

struct CostFit {
  CostModel model;
  double r_squared = 0.0;
  double residual = 0.0;  // root mean square
};

/// Least-squares (c0, c1) from (bands, time) pairs, c0 clamped at zero.
CostFit fit_cost_model(std::span<const std::pair<double, double>> measured);

/// Geometric spectrum lambda_j = rho^(j-1), j = 1..n.
std::vector<double> geometric_spectrum(double rho, std::size_t n);

struct GoldenResult {
  ConditionReport condition;
  TimeBoundReport bound;
  struct Quote {
    const char* name;
    double value;
    double quoted;
    double rel_delta;
    double tolerance;
  };
  std::vector<Quote> quotes;
};

/// Geometric rho = 0.95 spectrum, N = 200, K = 20, ridge 0.01 lambda_1,
/// Delta_0 = 1, delta = 5e-3, eps = 1e-3, step-cost ratio 0.1.
GoldenResult golden_instantiation();

}  // namespace spectrain
