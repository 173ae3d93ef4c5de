#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace spectrain {

/// Linear warmup followed by cosine decay, parameterized in epochs.
/// Defaults are the reference recipe: peak 0.004, 20 of 300 epochs warmup,
/// floor 1e-6.
struct LrSchedule {
  double peak_lr = 0.004;
  int warmup_epochs = 20;
  double min_lr = 1e-6;
  int total_epochs = 300;

  void validate() const;
  /// Constant step size: no warmup, floor equal to peak.
  static LrSchedule constant(double lr, int total_epochs = 1);
};

/// Learning rate at training-progress fraction t in [0, 1].
double lr_at(const LrSchedule& schedule, double t);

struct CurriculumStage {
  int index = 1;              // 1-based
  int b = 0;                  // spatial size B_i
  int k = 0;                  // retained components k_i
  long long steps = 0;        // optimization steps
  double lr_lo = 0.0;         // lr interval ((i-1)/N, i/N]
  double lr_hi = 0.0;
  std::vector<int> candidates;  // ascending; b is the resolved choice
};

struct SchedulePlan {
  int t0 = 0;                   // baseline epochs
  double beta = 0.5;
  int t = 0;                    // floor(beta * t0) epochs
  int n_stages = 0;
  int b0 = 0;                   // native spatial size
  int d = 0;                    // band count
  long long steps_per_epoch = 1;
  int t_ft = 0;                 // proxy fine-tune epochs
  std::vector<CurriculumStage> stages;

  long long total_steps() const noexcept { return static_cast<long long>(t) * steps_per_epoch; }
  void validate() const;
};

/// floor((T / N) * (B0 / B_i)^2), at least 1. Exact integer arithmetic.
long long steps_for_stage(long long total_steps, int n_stages, int b0, int b_i);

/// k_i = round(k1 + (i-1)(D-k1)/(N-1)); N = 1 gives [D].
std::vector<int> spectral_schedule(int k1, int d, int n_stages);

struct PlanRequest {
  int t0 = 300;
  double beta = 0.5;
  int n_stages = 3;
  int b0 = 0;
  int d = 0;
  int k1 = 0;
  /// One candidate set per stage. Multi-element sets are resolved later by
  /// order search; until then the smallest candidate is used.
  std::vector<std::vector<int>> b_candidates;
  long long steps_per_epoch = 1;
  int t_ft = 0;
};

SchedulePlan plan_schedule(const PlanRequest& request);

/// Re-resolves stage `i` (0-based) to spatial size `b`, recomputing its steps.
void set_stage_resolution(SchedulePlan& plan, std::size_t i, int b);

/// Scores one candidate resolution; higher is better. Exceptions and NaN
/// scores count as a failed candidate.
using ResolutionProxy = std::function<double(int b)>;

struct OrderSearchResult {
  int chosen = 0;
  std::vector<double> scores;  // per candidate (ascending order), NaN on failure
  bool searched = false;
};

/// argmax over candidates of proxy(b); ties go to the smaller b. A singleton
/// set returns its element without invoking the proxy.
OrderSearchResult order_search(std::vector<int> candidates, const ResolutionProxy& proxy);

nlohmann::json plan_to_json(const SchedulePlan& plan);
SchedulePlan plan_from_json(const nlohmann::json& j);
std::string format_plan_table(const SchedulePlan& plan);

}  // namespace spectrain
