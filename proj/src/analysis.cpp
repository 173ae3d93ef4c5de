#include "spectrain/analysis.hpp"

#include <cmath>
#include <numeric>

#include "spectrain/errors.hpp"

namespace spectrain {

void CostModel::validate() const {
  if (!(c0 >= 0.0) || !std::isfinite(c0)) throw ArgumentError("cost model: c0 must be >= 0");
  if (!(c1 > 0.0) || !std::isfinite(c1)) throw ArgumentError("cost model: c1 must be > 0");
}

double step_cost(const CostModel& model, double bands) {
  model.validate();
  return model.c0 + model.c1 * bands;
}

double cost_factor(int k, int n, int d) {
  if (k < 1 || n < 1 || d < 1 || k > n) throw ArgumentError("cost_factor: need 1 <= K <= N, d >= 1");
  return (static_cast<double>(k) / n) / (static_cast<double>(d) * d);
}

ConditionReport condition_numbers(std::span<const double> lambda, double ridge, double l_phi,
                                  std::size_t k, LossKind loss) {
  if (lambda.empty()) throw ArgumentError("condition_numbers: empty spectrum");
  if (k < 1 || k > lambda.size()) throw ArgumentError("condition_numbers: K out of range");
  if (!(ridge > 0.0)) throw ArgumentError("condition_numbers: ridge must be > 0");
  if (!(l_phi > 0.0)) throw ArgumentError("condition_numbers: L_phi must be > 0");
  ConditionReport r;
  r.l_full = l_phi * lambda.front() + ridge;
  r.l_k = r.l_full;
  if (loss == LossKind::squared) {
    r.mu_full = lambda.back() + ridge;
    r.mu_k = lambda[k - 1] + ridge;
  } else {
    r.mu_full = ridge;
    r.mu_k = ridge;
  }
  r.kappa_full = r.l_full / r.mu_full;
  r.kappa_k = r.l_k / r.mu_k;
  r.rho_full = 1.0 - r.mu_full / r.l_full;
  r.rho_k = 1.0 - r.mu_k / r.l_k;
  return r;
}

double sgd_variance_bound(std::span<const double> lambda, double c_phi, std::size_t k) {
  if (k < 1 || k > lambda.size()) throw ArgumentError("sgd_variance_bound: K out of range");
  const double s = std::accumulate(lambda.begin(), lambda.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  return c_phi * c_phi * s;
}

TimeBoundReport two_stage_bound(const ConditionReport& report, const CostModel& cost, int n, int k,
                                double delta0, double delta1, double eps, int d) {
  if (!(eps > 0.0 && eps < delta1 && delta1 <= delta0)) {
    throw ArgumentError("two_stage_bound: need 0 < eps < delta1 <= delta0");
  }
  if (k < 1 || k > n) throw ArgumentError("two_stage_bound: need 1 <= K <= N");
  if (!(report.kappa_full >= 1.0 && report.kappa_k >= 1.0)) {
    throw ArgumentError("two_stage_bound: condition numbers must be >= 1");
  }
  if (d < 1) throw ArgumentError("two_stage_bound: spatial factor d must be >= 1");
  const double sk = step_cost(cost, k) / (static_cast<double>(d) * d);
  const double sn = step_cost(cost, n);
  TimeBoundReport b;
  b.t1 = report.kappa_k * std::log(delta0 / delta1);
  b.t2 = report.kappa_full * std::log(delta1 / eps);
  b.t_ours = b.t1 * sk + b.t2 * sn;
  b.t_base = report.kappa_full * std::log(delta0 / eps) * sn;
  b.win_margin = (b.t1 / report.kappa_full) * (sk / sn) + std::log(delta1 / delta0);
  b.speedup = b.t_base / b.t_ours;
  return b;
}

TimeBoundReport s_stage_bound(std::span<const BoundStage> stages, double kappa_full, int n,
                              const CostModel& cost, double delta0, double eps) {
  if (stages.empty()) throw ArgumentError("s_stage_bound: empty stage list");
  if (!(eps > 0.0 && eps < delta0)) throw ArgumentError("s_stage_bound: need 0 < eps < delta0");
  if (!(kappa_full >= 1.0)) throw ArgumentError("s_stage_bound: kappa_full must be >= 1");
  const double sn = step_cost(cost, n);
  TimeBoundReport b;
  double early_cost = 0.0;
  double log_contraction = 0.0;  // ln of the product of per-stage contractions
  for (const auto& s : stages) {
    if (s.k < 1 || s.k > n || !(s.steps >= 0.0) || !(s.kappa >= 1.0)) {
      throw ArgumentError("s_stage_bound: invalid stage");
    }
    early_cost += s.steps * step_cost(cost, s.k);
    log_contraction -= s.steps / s.kappa;
  }
  b.t1 = std::accumulate(stages.begin(), stages.end(), 0.0,
                         [](double a, const BoundStage& s) { return a + s.steps; });
  const double remaining = log_contraction + std::log(delta0 / eps);
  b.t2 = kappa_full * std::max(0.0, remaining);
  b.t_ours = early_cost + b.t2 * sn;
  b.t_base = kappa_full * std::log(delta0 / eps) * sn;
  b.win_margin = (b.t_ours - b.t_base) / (kappa_full * sn);
  b.speedup = b.t_base / b.t_ours;
  return b;
}

double bias_variance_bound(std::span<const double> lambda, double ridge, double sigma2,
                           double m, double eps_bias) {
  if (!(ridge >= 0.0) || !(sigma2 >= 0.0) || !(m > 0.0)) {
    throw ArgumentError("bias_variance_bound: need ridge >= 0, sigma2 >= 0, M > 0");
  }
  double tr = 0.0;
  for (double l : lambda) {
    if (l + ridge > 0.0) tr += l / (l + ridge);
  }
  return eps_bias + (sigma2 / m) * tr;
}

double subspace_mahalanobis(std::span<const double> m_a, std::span<const double> m_b,
                            const Matrix& sigma, const Matrix& basis, std::size_t k) {
  const std::size_t d = m_a.size();
  if (m_b.size() != d || sigma.rows() != d || sigma.cols() != d || basis.rows() != d) {
    throw ArgumentError("subspace_mahalanobis: dimension mismatch");
  }
  if (k < 1 || k > basis.cols()) throw ArgumentError("subspace_mahalanobis: K out of range");
  const auto eig = jacobi_eigen(sigma);
  if (!(eig.values.back() > 1e-12 * eig.values.front())) {
    throw NumericError("subspace_mahalanobis: covariance is not positive definite");
  }
  std::vector<double> delta(d);
  for (std::size_t i = 0; i < d; ++i) delta[i] = m_a[i] - m_b[i];
  // v = P_K delta
  std::vector<double> coeff(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < d; ++i) coeff[j] += basis(i, j) * delta[i];
  }
  std::vector<double> v(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < k; ++j) v[i] += basis(i, j) * coeff[j];
  }
  // v^T Sigma^{-1} v through the eigenbasis of Sigma.
  double q = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double proj = 0.0;
    for (std::size_t i = 0; i < d; ++i) proj += eig.vectors(i, j) * v[i];
    q += proj * proj / eig.values[j];
  }
  return q;
}

CostFit fit_cost_model(std::span<const std::pair<double, double>> measured) {
  if (measured.size() < 2) throw FitError("fit_cost_model: need at least two measurements");
  const double n = static_cast<double>(measured.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : measured) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : measured) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 1e-12 * std::max(1.0, mx * mx))) {
    throw FitError("fit_cost_model: degenerate design (need two distinct band counts)");
  }
  double c1 = sxy / sxx;
  double c0 = my - c1 * mx;
  if (c0 < 0.0) {
    double x2 = 0.0, xy = 0.0;
    for (const auto& [x, y] : measured) {
      x2 += x * x;
      xy += x * y;
    }
    c0 = 0.0;
    c1 = xy / x2;
  }
  if (!(c1 > 0.0)) throw FitError("fit_cost_model: fitted marginal cost is not positive");
  double rss = 0.0;
  for (const auto& [x, y] : measured) {
    const double e = y - (c0 + c1 * x);
    rss += e * e;
  }
  CostFit fit;
  fit.model = {c0, c1};
  fit.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  fit.residual = std::sqrt(rss / n);
  return fit;
}

std::vector<double> geometric_spectrum(double rho, std::size_t n) {
  std::vector<double> l(n);
  double v = 1.0;
  for (auto& x : l) {
    x = v;
    v *= rho;
  }
  return l;
}

GoldenResult golden_instantiation() {
  const int n = 200, k = 20;
  const auto lambda = geometric_spectrum(0.95, n);
  GoldenResult g;
  g.condition = condition_numbers(lambda, 0.01 * lambda.front(), 1.0, k, LossKind::squared);
  const CostModel cost{0.0, 1.0 / n};
  g.bound = two_stage_bound(g.condition, cost, n, k, 1.0, 5e-3, 1e-3);
  auto quote = [](const char* name, double v, double q, double tol) {
    return GoldenResult::Quote{name, v, q, std::abs(v - q) / q, tol};
  };
  g.quotes = {quote("kappa_N", g.condition.kappa_full, 100.6, 0.01),
              quote("kappa_K", g.condition.kappa_k, 2.60, 0.01),
              quote("t1", g.bound.t1, 13.8, 0.02),
              quote("t2", g.bound.t2, 162.0, 0.02),
              quote("T_ours", g.bound.t_ours / step_cost(cost, n), 163.4, 0.02),
              quote("T_base", g.bound.t_base / step_cost(cost, n), 694.0, 0.02),
              quote("speedup", g.bound.speedup, 4.25, 0.02)};
  return g;
}

}  // namespace spectrain
