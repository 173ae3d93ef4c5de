#include "spectrain/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <iomanip>

#include "spectrain/errors.hpp"

namespace spectrain {

void LrSchedule::validate() const {
  if (!(min_lr >= 0.0 && min_lr <= peak_lr)) throw ArgumentError("lr schedule: need 0 <= min_lr <= peak_lr");
  if (total_epochs < 1) throw ArgumentError("lr schedule: total_epochs must be >= 1");
  if (warmup_epochs < 0 || warmup_epochs > total_epochs) {
    throw ArgumentError("lr schedule: warmup_epochs must be in [0, total_epochs]");
  }
}

LrSchedule LrSchedule::constant(double lr, int total_epochs) {
  return LrSchedule{lr, 0, lr, total_epochs};
}

double lr_at(const LrSchedule& s, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("lr_at: fraction must be in [0, 1]");
  s.validate();
  const double warm = static_cast<double>(s.warmup_epochs) / static_cast<double>(s.total_epochs);
  if (t < warm) return s.peak_lr * t / warm;
  if (warm >= 1.0) return s.peak_lr;
  const double p = (t - warm) / (1.0 - warm);
  return s.min_lr + (s.peak_lr - s.min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * p));
}

long long steps_for_stage(long long total_steps, int n_stages, int b0, int b_i) {
  if (total_steps < 1 || n_stages < 1 || b0 < 1 || b_i < 1) {
    throw ArgumentError("steps_for_stage: all arguments must be positive");
  }
  if (b_i > b0) throw ArgumentError("steps_for_stage: B_i exceeds the native size B0");
  const long long num = total_steps * static_cast<long long>(b0) * b0;
  const long long den = static_cast<long long>(n_stages) * b_i * b_i;
  return std::max(1LL, num / den);
}

std::vector<int> spectral_schedule(int k1, int d, int n_stages) {
  if (n_stages < 1) throw ArgumentError("spectral_schedule: need at least one stage");
  if (k1 < 1) throw ArgumentError("spectral_schedule: k1 must be >= 1");
  if (k1 > d) throw ArgumentError("spectral_schedule: k1 exceeds D");
  if (n_stages == 1) return {d};
  std::vector<int> ks(static_cast<std::size_t>(n_stages));
  for (int i = 0; i < n_stages; ++i) {
    const double v = k1 + static_cast<double>(i) * (d - k1) / (n_stages - 1);
    ks[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(v));
  }
  ks.back() = d;
  return ks;
}

void SchedulePlan::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw ArgumentError("plan: beta must be in (0, 1)");
  if (stages.empty()) throw ArgumentError("plan: no stages");
  if (static_cast<int>(stages.size()) != n_stages) throw ArgumentError("plan: n_stages != stage count");
  int prev_b = 0, prev_k = 0;
  for (const auto& s : stages) {
    if (s.candidates.empty()) throw ArgumentError("plan: empty candidate set");
    if (!std::is_sorted(s.candidates.begin(), s.candidates.end())) {
      throw ArgumentError("plan: candidate set not sorted ascending");
    }
    if (s.b < 1 || s.b > b0) throw ArgumentError("plan: stage resolution outside [1, B0]");
    if (s.k < 1 || s.k > d) throw ArgumentError("plan: stage k outside [1, D]");
    if (s.b < prev_b || s.k < prev_k) throw ArgumentError("plan: B_i and k_i must be nondecreasing");
    if (s.steps < 1) throw ArgumentError("plan: stage with no steps");
    prev_b = s.b;
    prev_k = s.k;
  }
}

SchedulePlan plan_schedule(const PlanRequest& r) {
  if (!(r.beta > 0.0 && r.beta < 1.0)) throw ArgumentError("plan_schedule: beta must be in (0, 1)");
  if (r.t0 < 1) throw ArgumentError("plan_schedule: T0 must be >= 1");
  if (r.n_stages < 1) throw ArgumentError("plan_schedule: need at least one stage");
  if (r.b0 < 1 || r.d < 1) throw ArgumentError("plan_schedule: B0 and D must be >= 1");
  if (r.steps_per_epoch < 1) throw ArgumentError("plan_schedule: steps_per_epoch must be >= 1");
  if (r.t_ft < 0) throw ArgumentError("plan_schedule: T_ft must be >= 0");
  if (static_cast<int>(r.b_candidates.size()) != r.n_stages) {
    throw ArgumentError("plan_schedule: need one candidate set per stage");
  }

  SchedulePlan plan;
  plan.t0 = r.t0;
  plan.beta = r.beta;
  plan.t = static_cast<int>(std::floor(r.beta * r.t0));
  if (plan.t < 1) throw ArgumentError("plan_schedule: floor(beta * T0) is zero");
  plan.n_stages = r.n_stages;
  plan.b0 = r.b0;
  plan.d = r.d;
  plan.steps_per_epoch = r.steps_per_epoch;
  plan.t_ft = r.t_ft;

  const auto ks = spectral_schedule(r.k1, r.d, r.n_stages);
  for (int i = 0; i < r.n_stages; ++i) {
    auto cands = r.b_candidates[static_cast<std::size_t>(i)];
    if (cands.empty()) throw ArgumentError("plan_schedule: empty candidate set for stage " + std::to_string(i + 1));
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    CurriculumStage s;
    s.index = i + 1;
    s.k = ks[static_cast<std::size_t>(i)];
    s.candidates = cands;
    s.b = cands.front();
    s.steps = steps_for_stage(plan.total_steps(), r.n_stages, r.b0, s.b);
    s.lr_lo = static_cast<double>(i) / r.n_stages;
    s.lr_hi = static_cast<double>(i + 1) / r.n_stages;
    plan.stages.push_back(std::move(s));
  }
  plan.validate();
  return plan;
}

void set_stage_resolution(SchedulePlan& plan, std::size_t i, int b) {
  if (i >= plan.stages.size()) throw ArgumentError("set_stage_resolution: stage out of range");
  auto& s = plan.stages[i];
  if (std::find(s.candidates.begin(), s.candidates.end(), b) == s.candidates.end()) {
    throw ArgumentError("set_stage_resolution: " + std::to_string(b) + " is not a candidate");
  }
  s.b = b;
  s.steps = steps_for_stage(plan.total_steps(), plan.n_stages, plan.b0, b);
}

OrderSearchResult order_search(std::vector<int> candidates, const ResolutionProxy& proxy) {
  if (candidates.empty()) throw ArgumentError("order_search: empty candidate set");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  OrderSearchResult res;
  if (candidates.size() == 1) {
    res.chosen = candidates.front();
    return res;
  }
  res.searched = true;
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int b : candidates) {
    double score = std::numeric_limits<double>::quiet_NaN();
    try {
      score = proxy(b);
    } catch (const std::exception&) {
      score = std::numeric_limits<double>::quiet_NaN();
    }
    res.scores.push_back(score);
    // Strict comparison over ascending candidates keeps the smaller B on ties.
    if (!std::isnan(score) && (!any || score > best)) {
      best = score;
      res.chosen = b;
      any = true;
    }
  }
  if (!any) throw SearchError("order_search: proxy failed on every candidate");
  return res;
}

nlohmann::json plan_to_json(const SchedulePlan& plan) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : plan.stages) {
    stages.push_back({{"i", s.index},
                      {"b", s.b},
                      {"k", s.k},
                      {"steps", s.steps},
                      {"lr_lo", s.lr_lo},
                      {"lr_hi", s.lr_hi},
                      {"candidates", s.candidates}});
  }
  return {{"t0", plan.t0},
          {"beta", plan.beta},
          {"t", plan.t},
          {"n_stages", plan.n_stages},
          {"b0", plan.b0},
          {"d", plan.d},
          {"steps_per_epoch", plan.steps_per_epoch},
          {"t_ft", plan.t_ft},
          {"stages", stages}};
}

SchedulePlan plan_from_json(const nlohmann::json& j) {
  try {
    SchedulePlan p;
    p.t0 = j.at("t0").get<int>();
    p.beta = j.at("beta").get<double>();
    p.t = j.value("t", static_cast<int>(std::floor(p.beta * p.t0)));
    p.n_stages = j.at("n_stages").get<int>();
    p.b0 = j.at("b0").get<int>();
    p.d = j.at("d").get<int>();
    p.steps_per_epoch = j.value("steps_per_epoch", 1LL);
    p.t_ft = j.value("t_ft", 0);
    for (const auto& js : j.at("stages")) {
      CurriculumStage s;
      s.index = js.at("i").get<int>();
      s.b = js.at("b").get<int>();
      s.k = js.at("k").get<int>();
      s.steps = js.at("steps").get<long long>();
      s.lr_lo = js.at("lr_lo").get<double>();
      s.lr_hi = js.at("lr_hi").get<double>();
      s.candidates = js.value("candidates", std::vector<int>{s.b});
      p.stages.push_back(std::move(s));
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("plan JSON: ") + e.what());
  }
}

std::string format_plan_table(const SchedulePlan& plan) {
  std::ostringstream os;
  os << "T0=" << plan.t0 << " beta=" << plan.beta << " T=" << plan.t
     << " steps/epoch=" << plan.steps_per_epoch << " B0=" << plan.b0 << " D=" << plan.d << '\n';
  os << std::setw(6) << "stage" << std::setw(6) << "B" << std::setw(6) << "k" << std::setw(10)
     << "steps" << std::setw(16) << "lr interval" << "  candidates\n";
  for (const auto& s : plan.stages) {
    std::ostringstream iv;
    iv << std::fixed << std::setprecision(3) << '(' << s.lr_lo << ',' << s.lr_hi << ']';
    os << std::setw(6) << s.index << std::setw(6) << s.b << std::setw(6) << s.k << std::setw(10)
       << s.steps << std::setw(16) << iv.str() << "  {";
    for (std::size_t c = 0; c < s.candidates.size(); ++c) os << (c ? "," : "") << s.candidates[c];
    os << "}\n";
  }
  return os.str();
}

}  // namespace spectrain
