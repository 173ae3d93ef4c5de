#include <openssl/evp.h>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spectrain/analysis.hpp"
#include "spectrain/cube.hpp"
#include "spectrain/errors.hpp"
#include "spectrain/schedule.hpp"
#include "spectrain/spectral.hpp"
#include "spectrain/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spectrain;

namespace {

constexpr const char* kToolVersion = "spectrain 0.1.0";

enum class Format { json, csv };

struct Context {
  std::uint64_t seed = 0;
  fs::path out_dir = ".";
  Format format = Format::json;
  std::vector<std::string> argv;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  std::string manifest_stem;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char tmp[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(tmp, sizeof tmp, "%02x", md[i]);
    hex += tmp;
  }
  return hex;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path output_path(Context& ctx, const std::string& name) {
  fs::create_directories(ctx.out_dir);
  fs::path p = ctx.out_dir / name;
  ctx.outputs.push_back(p);
  return p;
}

void write_json(Context& ctx, const std::string& name, const json& j) {
  std::ofstream out(output_path(ctx, name));
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::data, "failed writing " + name);
}

std::ofstream open_output(Context& ctx, const std::string& name) {
  std::ofstream out(output_path(ctx, name));
  if (!out) throw Error(ErrorKind::data, "cannot open " + name + " for writing");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw ArgumentError("cannot parse number '" + item + "'");
    }
  }
  return out;
}

/// "13,25;38;50" -> {{13,25},{38},{50}}
std::vector<std::vector<int>> parse_candidates(const std::string& s) {
  std::vector<std::vector<int>> sets;
  std::stringstream ss(s);
  std::string group;
  while (std::getline(ss, group, ';')) {
    std::vector<int> set;
    for (double v : parse_list(group)) {
      if (v != std::floor(v) || v < 1) throw ArgumentError("candidate sizes must be positive integers");
      set.push_back(static_cast<int>(v));
    }
    sets.push_back(set);
  }
  return sets;
}

LabeledCube load_scene(Context& ctx, const fs::path& cube, fs::path labels) {
  if (labels.empty()) {
    labels = cube;
    labels.replace_extension(".labels.json");
  }
  ctx.inputs.push_back(cube);
  ctx.inputs.push_back(labels);
  return load_labeled(cube, labels);
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  SyntheticOptions opt;
  std::string name = "cube";
};

void cmd_gen(Context& ctx, const GenArgs& a) {
  SyntheticOptions opt = a.opt;
  opt.seed = ctx.seed;
  const LabeledCube lc = generate_synthetic(opt);
  save_cube(lc.cube, output_path(ctx, a.name + ".hsc"));
  save_labels(lc, output_path(ctx, a.name + ".labels.json"));
  std::cout << "wrote " << (ctx.out_dir / (a.name + ".hsc")).string() << " (" << opt.height << "x"
            << opt.width << "x" << opt.bands << ", " << opt.classes << " classes)\n";
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string cube;
  double c0 = 0.0;
  double c1 = 1.0;
  bool export_basis = false;
};

void cmd_analyze(Context& ctx, const AnalyzeArgs& a) {
  ctx.inputs.push_back(a.cube);
  const HsiCube cube = load_cube(a.cube);
  const SpectralBasis basis = fit_pca(flatten(cube));
  const CostModel cost{a.c0, a.c1};
  cost.validate();
  const std::size_t d = basis.dims();
  const int n = static_cast<int>(d);

  std::vector<double> cumulative(d);
  for (std::size_t k = 1; k <= d; ++k) cumulative[k - 1] = explained_variance_ratio(basis, k);
  const double etas[] = {0.90, 0.95, 0.99};

  if (ctx.format == Format::json) {
    json sel = json::array();
    for (double eta : etas) {
      const std::size_t k = select_k(basis, eta);
      sel.push_back({{"eta", eta}, {"k", k}, {"explained", explained_variance_ratio(basis, k)},
                     {"compression_ratio", compression_ratio(d, k)}});
    }
    json curve = json::array();
    for (std::size_t k = 1; k <= d; ++k) {
      curve.push_back({{"k", k},
                       {"cumulative_variance", cumulative[k - 1]},
                       {"step_cost", step_cost(cost, static_cast<double>(k))},
                       {"cost_ratio", step_cost(cost, static_cast<double>(k)) / step_cost(cost, n)},
                       {"cost_factor", cost_factor(static_cast<int>(k), n, 1)}});
    }
    write_json(ctx, "analysis.json",
               {{"height", cube.height()},
                {"width", cube.width()},
                {"bands", d},
                {"pixels", cube.pixels()},
                {"cost_model", {{"c0", cost.c0}, {"c1", cost.c1}}},
                {"eigenvalues", basis.eigvals},
                {"select_k", sel},
                {"curve", curve}});
  } else {
    auto out = open_output(ctx, "analysis.csv");
    out << "k,eigenvalue,cumulative_variance,step_cost,cost_ratio,cost_factor\n";
    for (std::size_t k = 1; k <= d; ++k) {
      const double sc = step_cost(cost, static_cast<double>(k));
      out << k << ',' << fmt(basis.eigvals[k - 1]) << ',' << fmt(cumulative[k - 1]) << ',' << fmt(sc)
          << ',' << fmt(sc / step_cost(cost, n)) << ',' << fmt(cost_factor(static_cast<int>(k), n, 1))
          << '\n';
    }
    auto sel = open_output(ctx, "analysis_select_k.csv");
    sel << "eta,k,explained,compression_ratio\n";
    for (double eta : etas) {
      const std::size_t k = select_k(basis, eta);
      sel << fmt(eta) << ',' << k << ',' << fmt(explained_variance_ratio(basis, k)) << ','
          << fmt(compression_ratio(d, k)) << '\n';
    }
  }
  if (a.export_basis) {
    fs::create_directories(ctx.out_dir);
    export_basis(basis, ctx.out_dir / "basis");
    ctx.outputs.push_back(ctx.out_dir / "basis.json");
    ctx.outputs.push_back(ctx.out_dir / "basis.bin");
  }
  for (double eta : etas) {
    std::cout << "eta=" << eta << " k=" << select_k(basis, eta) << '\n';
  }
}

// ---------------------------------------------------------------- plan

struct PlanArgs {
  std::string cube;
  int b0 = 0;
  int d = 0;
  int k1 = 0;
  double eta = 0.95;
  int t0 = 300;
  double beta = 0.5;
  int stages = 3;
  std::string candidates;
  long long steps_per_epoch = 1;
  int t_ft = 1;
};

void cmd_plan(Context& ctx, const PlanArgs& a) {
  PlanRequest req;
  req.t0 = a.t0;
  req.beta = a.beta;
  req.n_stages = a.stages;
  req.b0 = a.b0;
  req.d = a.d;
  req.k1 = a.k1;
  req.steps_per_epoch = a.steps_per_epoch;
  req.t_ft = a.t_ft;
  if (!a.cube.empty()) {
    ctx.inputs.push_back(a.cube);
    const HsiCube cube = load_cube(a.cube);
    if (cube.height() != cube.width()) throw ArgumentError("plan: cube must be square");
    if (req.b0 == 0) req.b0 = static_cast<int>(cube.height());
    if (req.d == 0) req.d = static_cast<int>(cube.bands());
    if (req.k1 == 0) req.k1 = static_cast<int>(select_k(fit_pca(flatten(cube)), a.eta));
  }
  if (req.b0 < 1 || req.d < 1 || req.k1 < 1) {
    throw ArgumentError("plan: give --cube or all of --b0, --d, --k1");
  }
  if (a.candidates.empty()) {
    req.b_candidates.assign(static_cast<std::size_t>(std::max(0, a.stages)), {req.b0});
  } else {
    req.b_candidates = parse_candidates(a.candidates);
    if (req.b_candidates.size() == 1 && a.stages > 1) {
      req.b_candidates.assign(static_cast<std::size_t>(a.stages), req.b_candidates.front());
    }
  }
  const SchedulePlan plan = plan_schedule(req);
  write_json(ctx, "plan.json", plan_to_json(plan));
  std::cout << format_plan_table(plan);
  for (const auto& s : plan.stages) {
    if (s.candidates.size() > 1) {
      std::cout << "stage " << s.index << ": resolution chosen by order search during train\n";
    }
  }
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string cube;
  std::string labels;
  std::string plan;
  bool baseline = false;
  std::string backbone = "ridge";
  std::string optimizer = "gd";
  std::size_t batch = 16;
  int epochs = 100;
  double ridge_factor = 0.1;
  double lr_peak = 0.0;
  int warmup = 0;
  double min_lr = -1.0;
  double c0 = 0.0;
  double c1 = 1.0;
  std::string name;
  std::string thresholds = "1e-2,1e-3";
};

json gap_table(const TrainTrace& trace, const std::vector<double>& thresholds) {
  json rows = json::array();
  for (double th : thresholds) {
    const auto steps = steps_to_gap(trace, th);
    const auto cost = cost_to_gap(trace, th);
    json row{{"threshold", th}};
    if (steps) {
      row["reached"] = true;
      row["steps"] = *steps;
      row["sim_cost"] = *cost;
    } else {
      row["reached"] = false;
      row["steps"] = "not-reached";
      row["sim_cost"] = "not-reached";
    }
    rows.push_back(row);
  }
  return rows;
}

void cmd_train(Context& ctx, const TrainArgs& a) {
  const LabeledCube scene = load_scene(ctx, a.cube, a.labels);
  DataOptions dopt;
  dopt.backbone = parse_backbone(a.backbone);
  dopt.ridge_factor = a.ridge_factor;
  dopt.seed = ctx.seed;
  const TrainingData data(scene, dopt);

  TrainConfig cfg;
  cfg.optimizer = parse_optimizer(a.optimizer);
  cfg.batch_size = a.batch;
  cfg.seed = ctx.seed;
  cfg.cost = {a.c0, a.c1};
  cfg.cost.validate();

  std::optional<SchedulePlan> plan;
  if (!a.baseline) {
    if (!a.plan.empty()) {
      ctx.inputs.push_back(a.plan);
      std::ifstream in(a.plan);
      if (!in) throw FormatError("cannot read plan " + a.plan);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw FormatError(std::string("plan JSON: ") + e.what());
      }
      plan = plan_from_json(j);
    } else {
      plan = default_plan(data, cfg, a.epochs);
    }
  }
  const int total_epochs = plan ? plan->t : a.epochs;
  const double peak = a.lr_peak > 0.0 ? a.lr_peak : 1.0 / data.smoothness();
  cfg.lr = LrSchedule{peak, a.warmup, a.min_lr >= 0.0 ? a.min_lr : peak, std::max(1, total_epochs)};
  cfg.lr.validate();

  const TrainTrace trace = plan ? run_spectral_train(*plan, data, cfg) : run_baseline(data, a.epochs, cfg);
  const std::string name = !a.name.empty() ? a.name : (plan ? "curriculum" : "baseline");
  ctx.manifest_stem = name;
  {
    auto out = open_output(ctx, name + ".csv");
    write_trace_csv(trace, out);
  }

  const auto thresholds = parse_list(a.thresholds);
  json choices = json::array();
  for (const auto& c : trace.choices) {
    json scores = json::array();
    for (double s : c.proxy_scores) scores.push_back(std::isnan(s) ? json(nullptr) : json(s));
    choices.push_back({{"stage", c.stage}, {"chosen_b", c.chosen_b}, {"candidates", c.candidates}, {"proxy_scores", scores}});
  }
  json summary{{"mode", plan ? "curriculum" : "baseline"},
               {"backbone", to_string(dopt.backbone)},
               {"optimizer", to_string(cfg.optimizer)},
               {"seed", ctx.seed},
               {"final_accuracy", trace.final_accuracy},
               {"total_steps", trace.records.empty() ? 0LL : trace.records.back().step},
               {"total_sim_cost", trace.records.empty() ? 0.0 : trace.records.back().sim_cost},
               {"proxy_cost", trace.proxy_cost},
               {"ridge", data.ridge()},
               {"smoothness", data.smoothness()},
               {"strong_convexity", data.strong_convexity()},
               {"initial_gap", data.loss_gap(data.zero_model(0))},
               {"final_gap", trace.records.empty() ? data.loss_gap(data.zero_model(0)) : trace.records.back().loss_gap},
               {"lr", {{"peak_lr", cfg.lr.peak_lr}, {"warmup_epochs", cfg.lr.warmup_epochs}, {"min_lr", cfg.lr.min_lr}, {"total_epochs", cfg.lr.total_epochs}}},
               {"thresholds", gap_table(trace, thresholds)},
               {"order_search", choices}};
  if (plan) summary["plan"] = plan_to_json(*plan);
  if (ctx.format == Format::json) {
    write_json(ctx, name + ".summary.json", summary);
  } else {
    auto out = open_output(ctx, name + ".summary.csv");
    out << "threshold,steps,sim_cost\n";
    for (const auto& row : summary["thresholds"]) {
      out << fmt(row["threshold"].get<double>()) << ',';
      if (row["reached"].get<bool>()) {
        out << row["steps"].get<long long>() << ',' << fmt(row["sim_cost"].get<double>()) << '\n';
      } else {
        out << "not-reached,not-reached\n";
      }
    }
  }
  std::cout << name << ": final accuracy " << trace.final_accuracy << ", steps "
            << summary["total_steps"] << ", sim cost " << summary["total_sim_cost"] << '\n';
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::string trace_a;
  std::string trace_b;
  std::string summary_a;
  std::string summary_b;
  std::string thresholds = "1e-2,3e-3,1e-3";
};

std::optional<double> summary_accuracy(Context& ctx, const std::string& trace, std::string summary) {
  if (summary.empty()) {
    fs::path p = trace;
    p.replace_extension(".summary.json");
    if (!fs::exists(p)) return std::nullopt;
    summary = p.string();
  }
  ctx.inputs.push_back(summary);
  std::ifstream in(summary);
  if (!in) throw FormatError("cannot read " + summary);
  try {
    json j;
    in >> j;
    return j.at("final_accuracy").get<double>();
  } catch (const json::exception& e) {
    throw FormatError("summary " + summary + ": " + e.what());
  }
}

void cmd_compare(Context& ctx, const CompareArgs& a) {
  auto load = [&](const std::string& p) {
    ctx.inputs.push_back(p);
    std::ifstream in(p);
    if (!in) throw FormatError("cannot read trace " + p);
    return read_trace_csv(in);
  };
  const TrainTrace ta = load(a.trace_a);
  const TrainTrace tb = load(a.trace_b);
  const auto acc_a = summary_accuracy(ctx, a.trace_a, a.summary_a);
  const auto acc_b = summary_accuracy(ctx, a.trace_b, a.summary_b);

  json rows = json::array();
  auto csv = open_output(ctx, "compare.csv");
  csv << "threshold,cost_a,cost_b,speedup\n";
  for (double th : parse_list(a.thresholds)) {
    const auto ca = cost_to_gap(ta, th);
    const auto cb = cost_to_gap(tb, th);
    json row{{"threshold", th}};
    row["cost_a"] = ca ? json(*ca) : json("not-reached");
    row["cost_b"] = cb ? json(*cb) : json("not-reached");
    row["speedup"] = (ca && cb) ? json(*cb / *ca) : json("not-reached");
    rows.push_back(row);
    csv << fmt(th) << ',' << (ca ? fmt(*ca) : "not-reached") << ',' << (cb ? fmt(*cb) : "not-reached")
        << ',' << ((ca && cb) ? fmt(*cb / *ca) : "not-reached") << '\n';
    std::cout << "gap<=" << th << ": speedup "
              << ((ca && cb) ? fmt(*cb / *ca) : std::string("not-reached")) << '\n';
  }
  json report{{"trace_a", a.trace_a}, {"trace_b", a.trace_b}, {"thresholds", rows}};
  report["accuracy_a"] = acc_a ? json(*acc_a) : json(nullptr);
  report["accuracy_b"] = acc_b ? json(*acc_b) : json(nullptr);
  report["accuracy_delta"] = (acc_a && acc_b) ? json(*acc_a - *acc_b) : json(nullptr);
  write_json(ctx, "compare.json", report);
}

// ---------------------------------------------------------------- bounds

struct BoundsArgs {
  bool golden = false;
  int n = 200;
  int k = 20;
  int middle = 0;
  double rho = 0.95;
  double ridge_factor = 0.01;
  double l_phi = 1.0;
  std::string loss = "squared";
  double delta0 = 1.0;
  double delta = 5e-3;
  double eps = 1e-3;
  double c0 = 0.0;
  double c1 = 0.005;
  int d = 1;
};

json condition_json(const ConditionReport& r) {
  return {{"kappa_full", r.kappa_full}, {"kappa_k", r.kappa_k}, {"mu_full", r.mu_full},
          {"L_full", r.l_full},         {"mu_k", r.mu_k},       {"L_k", r.l_k},
          {"rho_k", r.rho_k},           {"rho_full", r.rho_full}};
}

json bound_json(const TimeBoundReport& b) {
  return {{"t1", b.t1},         {"t2", b.t2},
          {"T_ours", b.t_ours}, {"T_base", b.t_base},
          {"win_margin", b.win_margin}, {"speedup", b.speedup}};
}

void cmd_bounds(Context& ctx, BoundsArgs a) {
  if (a.golden) a = BoundsArgs{true};
  if (a.loss != "squared" && a.loss != "general") throw ArgumentError("--loss must be squared or general");
  const LossKind loss = a.loss == "squared" ? LossKind::squared : LossKind::general_convex;
  const auto lambda = geometric_spectrum(a.rho, static_cast<std::size_t>(a.n));
  const double ridge = a.ridge_factor * lambda.front();
  const CostModel cost{a.c0, a.c1};
  const ConditionReport cond = condition_numbers(lambda, ridge, a.l_phi, static_cast<std::size_t>(a.k), loss);
  const TimeBoundReport bound = two_stage_bound(cond, cost, a.n, a.k, a.delta0, a.delta, a.eps, a.d);

  json report{{"config",
               {{"n", a.n}, {"k", a.k}, {"rho", a.rho}, {"ridge", ridge}, {"L_phi", a.l_phi},
                {"loss", a.loss}, {"delta0", a.delta0}, {"delta", a.delta}, {"eps", a.eps},
                {"c0", a.c0}, {"c1", a.c1}, {"d", a.d}}},
              {"condition", condition_json(cond)},
              {"bound", bound_json(bound)}};

  if (a.middle > 0) {
    const ConditionReport mid = condition_numbers(lambda, ridge, a.l_phi, static_cast<std::size_t>(a.middle), loss);
    const double t2 = bound.t1 * step_cost(cost, a.k) / step_cost(cost, a.middle);
    const std::vector<BoundStage> stages = {{a.k, bound.t1, cond.kappa_k}, {a.middle, t2, mid.kappa_k}};
    report["three_stage"] = bound_json(s_stage_bound(stages, cond.kappa_full, a.n, cost, a.delta0, a.eps));
    report["three_stage"]["middle_k"] = a.middle;
  }

  if (a.golden) {
    const GoldenResult g = golden_instantiation();
    json quotes = json::array();
    std::printf("%-10s %12s %10s %10s %6s\n", "quantity", "value", "quoted", "rel_delta", "ok");
    for (const auto& q : g.quotes) {
      const bool ok = q.rel_delta <= q.tolerance;
      quotes.push_back({{"name", q.name}, {"value", q.value}, {"quoted", q.quoted},
                        {"rel_delta", q.rel_delta}, {"tolerance", q.tolerance}, {"within_tolerance", ok}});
      std::printf("%-10s %12.4f %10.4g %9.3f%% %6s\n", q.name, q.value, q.quoted, 100.0 * q.rel_delta,
                  ok ? "yes" : "NO");
    }
    report["golden"] = quotes;
  } else {
    std::printf("kappa_N=%.4f kappa_K=%.4f t1=%.4f t2=%.4f T_ours=%.4f T_base=%.4f speedup=%.4f\n",
                cond.kappa_full, cond.kappa_k, bound.t1, bound.t2, bound.t_ours, bound.t_base,
                bound.speedup);
  }

  if (ctx.format == Format::json) {
    write_json(ctx, "bounds.json", report);
  } else {
    auto out = open_output(ctx, "bounds.csv");
    out << "kappa_full,kappa_k,t1,t2,T_ours,T_base,speedup,win_margin\n"
        << fmt(cond.kappa_full) << ',' << fmt(cond.kappa_k) << ',' << fmt(bound.t1) << ','
        << fmt(bound.t2) << ',' << fmt(bound.t_ours) << ',' << fmt(bound.t_base) << ','
        << fmt(bound.speedup) << ',' << fmt(bound.win_margin) << '\n';
  }

  auto sweep = open_output(ctx, "bounds_sweep.csv");
  sweep << "K,d,t1,t2,T_ours,T_base,speedup,win_margin\n";
  for (int k : {5, 10, 20, 40, 60, 100, 150, 200, 400}) {
    if (k > a.n) continue;
    const ConditionReport ck = condition_numbers(lambda, ridge, a.l_phi, static_cast<std::size_t>(k), loss);
    for (int d : {1, 2, 4}) {
      const TimeBoundReport b = two_stage_bound(ck, cost, a.n, k, a.delta0, a.delta, a.eps, d);
      sweep << k << ',' << d << ',' << fmt(b.t1) << ',' << fmt(b.t2) << ',' << fmt(b.t_ours) << ','
            << fmt(b.t_base) << ',' << fmt(b.speedup) << ',' << fmt(b.win_margin) << '\n';
    }
  }
}

// ---------------------------------------------------------------- driver

void write_manifest(Context& ctx, const std::string& command, const std::string& started) {
  json inputs = json::array();
  for (const auto& p : ctx.inputs) {
    inputs.push_back({{"path", fs::absolute(p).lexically_normal().string()}, {"sha256", sha256_file(p)}});
  }
  json outputs = json::array();
  for (const auto& p : ctx.outputs) {
    outputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  }
  json m{{"command", command},
         {"argv", ctx.argv},
         {"seed", ctx.seed},
         {"out_dir", ctx.out_dir.string()},
         {"format", ctx.format == Format::json ? "json" : "csv"},
         {"cwd", fs::current_path().string()},
         {"tool_version", kToolVersion},
         {"inputs", inputs},
         {"outputs", outputs},
         {"started_utc", started},
         {"finished_utc", utc_now()}};
  const std::string stem = ctx.manifest_stem.empty() ? command : ctx.manifest_stem;
  fs::create_directories(ctx.out_dir);
  std::ofstream out(ctx.out_dir / (stem + ".manifest.json"));
  out << m.dump(2) << '\n';
}

void apply_thread_env() {
  const char* env = std::getenv("SPECTRAIN_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ArgumentError("SPECTRAIN_THREADS must be a positive integer");
  omp_set_num_threads(static_cast<int>(n));
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::argument: return 2;
    case ErrorKind::format: return 3;
    case ErrorKind::numeric: return 4;
    case ErrorKind::search: return 5;
    case ErrorKind::fit: return 6;
    case ErrorKind::data: return 7;
    case ErrorKind::unsupported: return 8;
  }
  return 1;
}

int run(std::vector<std::string> args);

int cmd_replay(const std::string& manifest_path, const std::string& out_dir) {
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("cannot read manifest " + manifest_path);
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  std::vector<std::string> argv;
  try {
    for (const auto& p : m.at("inputs")) {
      const fs::path path = p.at("path").get<std::string>();
      if (!fs::exists(path) || sha256_file(path) != p.at("sha256").get<std::string>()) {
        throw Error(ErrorKind::data, "replay: input " + path.string() + " changed since the manifest was written");
      }
    }
    argv = m.at("argv").get<std::vector<std::string>>();
    const fs::path target = fs::absolute(out_dir);
    fs::current_path(m.at("cwd").get<std::string>());
    std::vector<std::string> rewritten{"--out-dir", target.string()};
    for (std::size_t i = 0; i < argv.size(); ++i) {
      if (argv[i] == "--out-dir") {
        ++i;
        continue;
      }
      if (argv[i].rfind("--out-dir=", 0) == 0) continue;
      rewritten.push_back(argv[i]);
    }
    argv = std::move(rewritten);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return run(argv);
}

int run(std::vector<std::string> args) {
  CLI::App app{"Spectral curriculum training toolkit for hyperspectral cubes"};
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx;
  std::string format = "json";
  std::string out_dir = ".";
  app.add_option("--seed", ctx.seed, "Seed for every random draw (default 0)");
  app.add_option("--out-dir", out_dir, "Directory for all outputs");
  app.add_option("--format", format, "Report encoding")->check(CLI::IsMember({"json", "csv"}));

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a labeled synthetic cube");
  g->add_option("--height", gen.opt.height);
  g->add_option("--width", gen.opt.width);
  g->add_option("--bands", gen.opt.bands);
  g->add_option("--classes", gen.opt.classes);
  g->add_option("--rho", gen.opt.rho, "Geometric eigenvalue decay");
  g->add_option("--noise", gen.opt.noise_sigma, "Isotropic noise sigma");
  g->add_option("--stripe-width", gen.opt.stripe_width, "Vertical class stripes of this width (0: blocks)");
  g->add_option("--name", gen.name, "Output stem");

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "Spectrum, cumulative variance, select_k and cost curves");
  a->add_option("cube", an.cube)->required();
  a->add_option("--c0", an.c0);
  a->add_option("--c1", an.c1);
  a->add_flag("--export-basis", an.export_basis, "Also write basis.json/basis.bin");

  PlanArgs pl;
  auto* p = app.add_subcommand("plan", "Build a curriculum plan");
  p->add_option("--cube", pl.cube, "Derive B0, D and k1 from this cube");
  p->add_option("--b0", pl.b0);
  p->add_option("--d", pl.d);
  p->add_option("--k1", pl.k1);
  p->add_option("--eta", pl.eta, "Variance target for k1 when derived from --cube");
  p->add_option("--t0", pl.t0, "Baseline epochs");
  p->add_option("--beta", pl.beta, "Budget ratio");
  p->add_option("--stages", pl.stages);
  p->add_option("--candidates", pl.candidates, "Per-stage sizes, e.g. '13,25;38;50'");
  p->add_option("--steps-per-epoch", pl.steps_per_epoch);
  p->add_option("--t-ft", pl.t_ft, "Proxy fine-tune epochs for order search");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the baseline or the spectral curriculum");
  t->add_option("--cube", tr.cube)->required();
  t->add_option("--labels", tr.labels, "Labels sidecar (default <cube>.labels.json)");
  t->add_option("--plan", tr.plan, "Plan JSON (default: 3-stage plan)");
  t->add_flag("--baseline", tr.baseline, "Full spectrum from the first step");
  t->add_option("--backbone", tr.backbone)->check(CLI::IsMember({"ridge", "logistic"}));
  t->add_option("--optimizer", tr.optimizer)->check(CLI::IsMember({"gd", "sgd"}));
  t->add_option("--batch", tr.batch);
  t->add_option("--epochs", tr.epochs, "Baseline epochs T0");
  t->add_option("--ridge-factor", tr.ridge_factor, "Ridge as a multiple of the top eigenvalue");
  t->add_option("--lr", tr.lr_peak, "Peak learning rate (default 1/L)");
  t->add_option("--warmup", tr.warmup, "Warmup epochs");
  t->add_option("--min-lr", tr.min_lr, "Cosine floor (default: the peak, i.e. constant)");
  t->add_option("--c0", tr.c0);
  t->add_option("--c1", tr.c1);
  t->add_option("--name", tr.name, "Output stem");
  t->add_option("--thresholds", tr.thresholds, "Loss-gap thresholds for the summary");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Speedup of trace A over trace B at matched loss gaps");
  c->add_option("trace_a", cmp.trace_a)->required();
  c->add_option("trace_b", cmp.trace_b)->required();
  c->add_option("--summary-a", cmp.summary_a);
  c->add_option("--summary-b", cmp.summary_b);
  c->add_option("--thresholds", cmp.thresholds);

  BoundsArgs bd;
  auto* b = app.add_subcommand("bounds", "Condition numbers and time-to-eps bounds");
  b->add_flag("--golden", bd.golden, "Evaluate the reference instantiation and print deltas");
  b->add_option("--n", bd.n);
  b->add_option("--k", bd.k);
  b->add_option("--middle", bd.middle, "Add a middle stage at this K");
  b->add_option("--rho", bd.rho);
  b->add_option("--ridge-factor", bd.ridge_factor);
  b->add_option("--l-phi", bd.l_phi);
  b->add_option("--loss", bd.loss)->check(CLI::IsMember({"squared", "general"}));
  b->add_option("--delta0", bd.delta0);
  b->add_option("--delta", bd.delta);
  b->add_option("--eps", bd.eps);
  b->add_option("--c0", bd.c0);
  b->add_option("--c1", bd.c1);
  b->add_option("--d", bd.d, "Spatial downsample factor of the first stage");

  std::string manifest;
  auto* r = app.add_subcommand("replay", "Re-run a command from its manifest");
  r->add_option("manifest", manifest)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    apply_thread_env();
    if (r->parsed()) return cmd_replay(manifest, out_dir == "." ? "replay" : out_dir);
    ctx.out_dir = out_dir;
    ctx.format = format == "csv" ? Format::csv : Format::json;
    ctx.argv = args;
    const std::string started = utc_now();
    std::string command;
    if (g->parsed()) {
      command = "gen";
      cmd_gen(ctx, gen);
    } else if (a->parsed()) {
      command = "analyze";
      cmd_analyze(ctx, an);
    } else if (p->parsed()) {
      command = "plan";
      cmd_plan(ctx, pl);
    } else if (t->parsed()) {
      command = "train";
      cmd_train(ctx, tr);
    } else if (c->parsed()) {
      command = "compare";
      cmd_compare(ctx, cmp);
    } else if (b->parsed()) {
      command = "bounds";
      cmd_bounds(ctx, bd);
    }
    write_manifest(ctx, command, started);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 7;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args));
}
