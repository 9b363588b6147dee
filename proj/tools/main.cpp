// goalcomp: command-line front door for the compression pipeline.
//
// Subcommands: solve, fit {klt,lt,goq,lbg,uniform,iterative}, eval, gen.
// Exit codes: 0 success, 2 usage or input validation error, 1 runtime failure.
// Every command accepts --json for machine-readable stdout and logs the fully
// resolved configuration (including the seed) to stderr.

#include <goalcomp/eval.hpp>
#include <goalcomp/model_io.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using goalcomp::Codebook;
using goalcomp::Dataset;
using goalcomp::ExperimentConfig;
using goalcomp::Json;
using goalcomp::NormOrder;
using goalcomp::Precoder;
using goalcomp::TaskSpec;
using goalcomp::TrainConfig;
using goalcomp::Vec;

// Bad input from the user (flags, files, shapes) as opposed to a failure
// while doing the actual work; mapped to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto as_usage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::string fmt(double v) { return goalcomp::detail::format_double(v); }

void log_config(const Json& resolved) {
  std::cerr << "[goalcomp] config " << resolved.dump() << '\n';
}

void emit_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

double parse_number(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw UsageError("cannot parse '" + s + "' as a number");
  }
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos != s.size()) throw UsageError("cannot parse '" + s + "' as a number");
  if (!std::isfinite(v)) throw UsageError("non-finite value '" + s + "'");
  return v;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  for (const auto& tok : split_commas(s)) {
    const double v = parse_number(tok);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) throw UsageError(std::string(what) + ": '" + tok + "' is not an integer");
    out.push_back(i);
  }
  if (out.empty()) throw UsageError(std::string(what) + ": empty list");
  return out;
}

std::vector<NormOrder> parse_norm_list(const std::string& s) {
  std::vector<NormOrder> out;
  for (const auto& tok : split_commas(s)) out.push_back(as_usage([&] { return NormOrder::parse(tok); }));
  if (out.empty()) throw UsageError("--p: empty list");
  return out;
}

Dataset load_data(const std::string& path) {
  return as_usage([&] { return goalcomp::load_profiles_csv(path); });
}

Json load_config_file(const std::string& path) {
  return as_usage([&] { return goalcomp::load_json(path); });
}

// --profile accepts either an inline comma-separated list or a CSV file path
// (with --row selecting the profile).
Vec parse_profile(const std::string& arg, int row) {
  if (std::filesystem::exists(arg)) {
    const Dataset data = load_data(arg);
    if (row < 0 || row >= data.size())
      throw UsageError("--row " + std::to_string(row) + " out of range for " +
                       std::to_string(data.size()) + " profiles");
    return data.sample(row);
  }
  const auto fields = split_commas(arg);
  if (fields.empty()) throw UsageError("--profile: empty profile");
  Vec v(static_cast<Eigen::Index>(fields.size()));
  for (std::size_t i = 0; i < fields.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_number(fields[i]);
  return v;
}

// ---------------------------------------------------------------------------
// solve

struct SolveOpts {
  std::string profile;
  int row = 0;
  double energy = 0.0;
  std::string p = "inf";
  bool json = false;
};

int run_solve(const SolveOpts& o) {
  const Vec load = parse_profile(o.profile, o.row);
  const NormOrder p = as_usage([&] { return NormOrder::parse(o.p); });
  const TaskSpec spec = as_usage([&] { return TaskSpec(p, o.energy); });

  Json resolved;
  resolved["command"] = "solve";
  resolved["n"] = load.size();
  resolved["p"] = goalcomp::norm_to_json(p);
  resolved["e"] = spec.energy;
  log_config(resolved);

  const auto d = goalcomp::solve_waterfill(load, spec);
  const double u = goalcomp::utility(d.allocation, load, spec);
  if (o.json) {
    Json j;
    j["config"] = resolved;
    j["allocation"] = goalcomp::detail::vec_to_json(d.allocation);
    j["water_level"] = d.water_level;
    j["active_count"] = d.active_count;
    j["utility"] = u;
    emit_json(j);
  } else {
    std::cout << "x*:";
    for (Eigen::Index i = 0; i < d.allocation.size(); ++i)
      std::cout << (i ? "," : " ") << fmt(d.allocation(i));
    std::cout << '\n';
    std::cout << "mu: " << fmt(d.water_level) << '\n';
    std::cout << "active: " << d.active_count << '\n';
    std::cout << "utility: " << fmt(u) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitOpts {
  std::string mode;
  std::string data;
  std::string out;
  std::string precoder_path;
  std::string config_path;
  int k = 0;
  int bits = 0;
  std::string p = "inf";
  double energy = 50.0;
  std::uint64_t seed = 0;
  bool centered = false;
  bool json = false;
  // which flags were given on the command line (flags beat the config file)
  bool has_p = false, has_e = false, has_seed = false, has_k = false;
};

// Flag > config file > (for the task) the precoder model's own task > default.
struct FitResolved {
  TaskSpec spec{NormOrder::inf(), 50.0};
  TrainConfig train;
  std::uint64_t seed = 0;
};

FitResolved resolve_fit(const FitOpts& o, const std::optional<TaskSpec>& model_task) {
  FitResolved r;
  ExperimentConfig file_cfg;
  bool file_has_task = false, file_has_seed = false;
  if (!o.config_path.empty()) {
    const Json j = load_config_file(o.config_path);
    file_cfg = as_usage([&] { return goalcomp::experiment_config_from_json(j); });
    file_has_task = j.contains("task");
    file_has_seed = j.contains("seed");
  }
  r.train = file_cfg.train;

  NormOrder p = NormOrder::inf();
  double e = 50.0;
  if (model_task) {
    p = model_task->p;
    e = model_task->energy;
  }
  if (file_has_task) {
    p = file_cfg.spec.p;
    e = file_cfg.spec.energy;
  }
  if (o.has_p) p = as_usage([&] { return NormOrder::parse(o.p); });
  if (o.has_e) e = o.energy;
  r.spec = as_usage([&] { return TaskSpec(p, e); });

  r.seed = file_has_seed ? file_cfg.seed : 0;
  if (o.has_seed) r.seed = o.seed;
  r.train.seed = r.seed;
  return r;
}

goalcomp::LoadedModel load_precoder_model(const std::string& path) {
  auto m = as_usage([&] { return goalcomp::load_model(path); });
  if (m.kind != "precoder")
    throw UsageError("--precoder: " + path + " is a " + m.kind + " model, expected a precoder");
  return m;
}

int finish_fit(const FitOpts& o, const Json& resolved, const Json& model,
               const std::vector<double>& trace) {
  as_usage([&] {
    goalcomp::save_json(model, o.out);
    return 0;
  });
  if (o.json) {
    Json j;
    j["config"] = resolved;
    j["out"] = o.out;
    j["model_hash"] = goalcomp::model_hash(model);
    j["loss_trace"] = trace;
    emit_json(j);
  } else {
    for (const double v : trace) std::cout << fmt(v) << '\n';
    std::cerr << "[goalcomp] wrote " << o.out << '\n';
  }
  return 0;
}

Json fit_resolved_json(const FitOpts& o, const FitResolved& r) {
  Json j;
  j["command"] = "fit";
  j["mode"] = o.mode;
  j["data"] = o.data;
  j["task"] = goalcomp::task_to_json(r.spec);
  j["seed"] = r.seed;
  if (o.has_k || o.mode == "klt" || o.mode == "lt" || o.mode == "iterative") j["k"] = o.k;
  if (o.mode != "klt" && o.mode != "lt") j["bits"] = o.bits;
  if (!o.precoder_path.empty()) j["precoder"] = o.precoder_path;
  j["out"] = o.out;
  return j;
}

int run_fit(const FitOpts& o) {
  const Dataset data = load_data(o.data);

  if (o.mode == "klt" || o.mode == "lt" || o.mode == "iterative") {
    const FitResolved r = resolve_fit(o, std::nullopt);
    if (o.k < 1 || o.k > data.dim())
      throw UsageError("--k must lie in [1, " + std::to_string(data.dim()) + "], got " +
                       std::to_string(o.k));
    const Json resolved = fit_resolved_json(o, r);
    log_config(resolved);

    if (o.mode == "klt") {
      const Precoder p = goalcomp::klt_basis(data, o.k, o.centered);
      const std::vector<double> trace{goalcomp::empirical_loss(p, data, r.spec)};
      return finish_fit(o, resolved, goalcomp::precoder_to_json(p, r.spec, false), trace);
    }
    if (o.mode == "lt") {
      const auto fit = goalcomp::fit_linear_precoder(data, r.spec, o.k, r.train);
      return finish_fit(o, resolved, goalcomp::precoder_to_json(fit.precoder, r.spec, true),
                        fit.trace.loss);
    }
    const auto st = goalcomp::fit_iterative(data, r.spec, o.k, o.bits, r.train);
    const auto noise = goalcomp::estimate_noise(st.best.codebook, st.best.precoder, data, r.spec);
    return finish_fit(o, resolved,
                      goalcomp::codesign_to_json(st.best.precoder, st.best.codebook, noise,
                                                 st.loss_trace, r.spec),
                      st.loss_trace);
  }

  // Quantizer fits run on top of an existing precoder model.
  const auto pm = load_precoder_model(o.precoder_path);
  if (o.has_k && o.k != pm.precoder.latent_dim())
    throw UsageError("--k " + std::to_string(o.k) + " disagrees with the precoder's latent size " +
                     std::to_string(pm.precoder.latent_dim()));
  if (pm.precoder.dim() != data.dim())
    throw UsageError("precoder expects N=" + std::to_string(pm.precoder.dim()) +
                     " but the data has N=" + std::to_string(data.dim()));
  const FitResolved r = resolve_fit(o, pm.task);
  const Json resolved = fit_resolved_json(o, r);
  log_config(resolved);

  Codebook cb;
  std::vector<double> trace;
  if (o.mode == "goq") {
    auto fit = goalcomp::fit_goq(data, pm.precoder, r.spec, o.bits, r.train);
    cb = std::move(fit.codebook);
    trace = std::move(fit.trace);
  } else if (o.mode == "lbg") {
    auto fit = goalcomp::fit_lbg(data, pm.precoder, o.bits, r.train);
    cb = std::move(fit.codebook);
    trace = std::move(fit.trace);
    goalcomp::detail::refresh_caches(cb, pm.precoder, &r.spec);
  } else {
    cb = goalcomp::uniform_scalar_quantizer(data, pm.precoder, o.bits);
    goalcomp::detail::refresh_caches(cb, pm.precoder, &r.spec);
    trace = {goalcomp::goal_loss(cb, data, pm.precoder, r.spec)};
  }
  return finish_fit(o, resolved,
                    goalcomp::codebook_bundle_to_json(pm.precoder, cb, r.spec, pm.trained), trace);
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string data;
  std::string model;
  std::string test;
  double split = 0.0;
  std::string out = "report";
  std::string config_path;
  std::string precoder_path;
  std::string p;
  double energy = 50.0;
  std::uint64_t seed = 0;
  std::string methods;
  std::string k_list;
  std::string bits_list;
  int synth_t = 0;
  int synth_n = 0;
  bool latent_only = false;
  bool json = false;
  bool has_p = false, has_e = false, has_seed = false, has_split = false;
};

int run_eval_model(const EvalOpts& o) {
  if (o.data.empty()) throw UsageError("--data is required when evaluating a model");
  const Dataset data = load_data(o.data);
  auto m = as_usage([&] { return goalcomp::load_model(o.model); });

  NormOrder p = m.task ? m.task->p : NormOrder::inf();
  double e = m.task ? m.task->energy : 50.0;
  if (o.has_p) p = as_usage([&] { return NormOrder::parse(o.p); });
  if (o.has_e) e = o.energy;
  const TaskSpec spec = as_usage([&] { return TaskSpec(p, e); });

  // A bare codebook file needs its precoder supplied separately.
  if (m.kind == "codebook" && !m.codebook) {
    if (o.precoder_path.empty())
      throw UsageError("codebook model has no embedded precoder; pass --precoder");
    const auto pm = load_precoder_model(o.precoder_path);
    m.precoder = pm.precoder;
    m.codebook =
        as_usage([&] { return goalcomp::codebook_from_json(*m.codebook_json, m.precoder, &spec); });
  }
  if (m.precoder.basis.size() == 0) throw UsageError("model has no precoder");
  if (m.precoder.dim() != data.dim())
    throw UsageError("model expects N=" + std::to_string(m.precoder.dim()) +
                     " but the data has N=" + std::to_string(data.dim()));
  if (m.codebook) goalcomp::detail::refresh_caches(*m.codebook, m.precoder, &spec);
  const Codebook* cb = m.codebook ? &*m.codebook : nullptr;

  Json resolved;
  resolved["command"] = "eval";
  resolved["model"] = o.model;
  resolved["kind"] = m.kind;
  resolved["data"] = o.data;
  resolved["task"] = goalcomp::task_to_json(spec);
  resolved["seed"] = o.seed;
  resolved["latent_only"] = o.latent_only;
  if (!o.test.empty()) resolved["test"] = o.test;
  if (o.has_split) resolved["split_fraction"] = o.split;
  log_config(resolved);

  auto score = [&](const Dataset& d) {
    const Vec up = goalcomp::perfect_utilities(d, spec);
    const Vec uc = goalcomp::pipeline_utilities(d, m.precoder, cb, spec, o.latent_only);
    return goalcomp::rsol(up, uc);
  };

  Json j;
  j["config"] = resolved;
  if (!o.test.empty()) {
    const Dataset test = load_data(o.test);
    const double train_rsol = score(data);
    const double test_rsol = score(test);
    j["rsol_train"] = train_rsol;
    j["rsol_test"] = test_rsol;
    if (o.json) emit_json(j);
    else std::cout << "rsol_train: " << fmt(train_rsol) << "\nrsol_test: " << fmt(test_rsol) << '\n';
  } else if (o.has_split) {
    const auto [train, test] =
        as_usage([&] { return goalcomp::split_dataset(data, o.split, o.seed); });
    const double train_rsol = score(train);
    const double test_rsol = score(test);
    j["rsol_train"] = train_rsol;
    j["rsol_test"] = test_rsol;
    if (o.json) emit_json(j);
    else std::cout << "rsol_train: " << fmt(train_rsol) << "\nrsol_test: " << fmt(test_rsol) << '\n';
  } else {
    const double r = score(data);
    j["rsol"] = r;
    if (o.json) emit_json(j);
    else std::cout << "rsol: " << fmt(r) << '\n';
  }
  return 0;
}

int run_eval_sweep(const EvalOpts& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty())
    cfg = as_usage(
        [&] { return goalcomp::experiment_config_from_json(load_config_file(o.config_path)); });

  if (!o.data.empty()) cfg.dataset_path = o.data;
  if (o.synth_t > 0) cfg.synth_t = o.synth_t;
  if (o.synth_n > 0) cfg.synth_n = o.synth_n;
  if (o.has_seed) cfg.seed = o.seed;
  if (o.has_split) cfg.split_fraction = o.split;
  if (o.has_p) {
    const auto ps = parse_norm_list(o.p);
    if (ps.size() == 1) {
      cfg.spec = as_usage([&] { return TaskSpec(ps[0], cfg.spec.energy); });
      cfg.p_values.clear();
    } else {
      cfg.p_values = ps;
    }
  }
  if (o.has_e) cfg.spec = as_usage([&] { return TaskSpec(cfg.spec.p, o.energy); });
  if (!o.k_list.empty()) cfg.k_values = parse_int_list(o.k_list, "--k");
  if (!o.bits_list.empty()) cfg.bit_values = parse_int_list(o.bits_list, "--bits");
  if (!o.methods.empty()) {
    cfg.methods.clear();
    for (const auto& name : split_commas(o.methods))
      cfg.methods.push_back(as_usage([&] { return goalcomp::method_from_name(name); }));
  }
  cfg.latent_only_eval = o.latent_only;
  cfg.train.seed = cfg.seed;

  as_usage([&] { return goalcomp::sweep_axis(cfg); });  // validate before training
  Json resolved = goalcomp::experiment_config_to_json(cfg);
  resolved["command"] = "eval";
  resolved["out"] = o.out;
  log_config(resolved);

  const auto report = goalcomp::run_experiment(cfg);
  goalcomp::emit_report(report, o.out);

  if (o.json) {
    Json j = goalcomp::report_to_json(report);
    j["determinism_hash"] = goalcomp::report_determinism_hash(report);
    j["out"] = o.out;
    emit_json(j);
  } else {
    for (const auto& r : report.results) {
      std::cout << report.sweep_axis << "=" << r.sweep_label << " method=" << r.method;
      if (r.failed) std::cout << " FAILED: " << r.error << '\n';
      else
        std::cout << " rsol_train=" << fmt(r.rsol_train) << " rsol_test=" << fmt(r.rsol_test)
                  << '\n';
    }
    std::cerr << "[goalcomp] report written to " << o.out << '\n';
  }
  return 0;
}

int run_eval(const EvalOpts& o) {
  return o.model.empty() ? run_eval_sweep(o) : run_eval_model(o);
}

// ---------------------------------------------------------------------------
// gen

struct GenOpts {
  int t = 0;
  int n = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool two_cluster = false;
  bool json = false;
};

int run_gen(const GenOpts& o) {
  goalcomp::SyntheticParams params;
  params.two_cluster = o.two_cluster;
  const Dataset data = as_usage([&] { return goalcomp::gen_synthetic(o.t, o.n, o.seed, params); });

  Json resolved;
  resolved["command"] = "gen";
  resolved["t"] = o.t;
  resolved["n"] = o.n;
  resolved["seed"] = o.seed;
  resolved["two_cluster"] = o.two_cluster;
  resolved["out"] = o.out;
  log_config(resolved);

  as_usage([&] {
    goalcomp::write_profiles_csv(data, o.out);
    return 0;
  });
  if (o.json) {
    Json j;
    j["config"] = resolved;
    j["out"] = o.out;
    j["t"] = data.size();
    j["n"] = data.dim();
    emit_json(j);
  } else {
    std::cerr << "[goalcomp] wrote " << o.out << " (" << data.size() << "x" << data.dim() << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goal-oriented lossy compression for power consumption scheduling"};
  app.require_subcommand(1);

  SolveOpts so;
  auto* solve = app.add_subcommand("solve", "water-filling allocation for one task instance");
  solve->add_option("--profile", so.profile, "inline comma-separated loads or a CSV path")
      ->required();
  solve->add_option("--row", so.row, "profile row when --profile is a CSV file");
  solve->add_option("--e", so.energy, "energy budget E")->required();
  solve->add_option("--p", so.p, "norm order (integer or 'inf')");
  solve->add_flag("--json", so.json, "machine-readable output");

  FitOpts fo;
  auto* fit = app.add_subcommand("fit", "train a model");
  fit->require_subcommand(1);
  const auto add_fit_common = [&](CLI::App* sub) {
    sub->add_option("--data", fo.data, "training profiles CSV")->required();
    sub->add_option("--out", fo.out, "output model path")->required();
    sub->add_option("--config", fo.config_path, "JSON config file (flags win)");
    sub->add_option("--p", fo.p, "norm order (integer or 'inf')");
    sub->add_option("--e", fo.energy, "energy budget E");
    sub->add_option("--seed", fo.seed, "training seed");
    sub->add_flag("--json", fo.json, "machine-readable output");
  };
  auto* fit_klt = fit->add_subcommand("klt", "principal-subspace precoder");
  add_fit_common(fit_klt);
  fit_klt->add_option("--k", fo.k, "latent dimension")->required();
  fit_klt->add_flag("--centered", fo.centered, "subtract the mean before the eigenproblem");
  auto* fit_lt = fit->add_subcommand("lt", "goal-trained linear precoder");
  add_fit_common(fit_lt);
  fit_lt->add_option("--k", fo.k, "latent dimension")->required();
  auto* fit_goq = fit->add_subcommand("goq", "goal-oriented quantizer");
  auto* fit_lbg = fit->add_subcommand("lbg", "distortion-oriented quantizer");
  auto* fit_uniform = fit->add_subcommand("uniform", "uniform scalar quantizer");
  for (auto* sub : {fit_goq, fit_lbg, fit_uniform}) {
    add_fit_common(sub);
    sub->add_option("--precoder", fo.precoder_path, "precoder model to quantize against")
        ->required();
    sub->add_option("--bits", fo.bits, "codebook budget in bits")->required();
    sub->add_option("--k", fo.k, "latent dimension (checked against the precoder)");
  }
  auto* fit_iter = fit->add_subcommand("iterative", "alternating precoder/quantizer codesign");
  add_fit_common(fit_iter);
  fit_iter->add_option("--k", fo.k, "latent dimension")->required();
  fit_iter->add_option("--bits", fo.bits, "codebook budget in bits")->required();

  EvalOpts eo;
  auto* eval = app.add_subcommand("eval", "RSOL of a model, or a full method sweep");
  eval->add_option("--data", eo.data, "profiles CSV (train side; synthetic when omitted in sweeps)");
  eval->add_option("--model", eo.model, "model file to evaluate (omit to run a sweep)");
  eval->add_option("--test", eo.test, "held-out profiles CSV");
  eval->add_option("--split", eo.split, "train fraction for a seeded split");
  eval->add_option("--out", eo.out, "report directory for sweeps");
  eval->add_option("--config", eo.config_path, "experiment config JSON (flags win)");
  eval->add_option("--precoder", eo.precoder_path, "precoder for a bare codebook model");
  eval->add_option("--p", eo.p, "norm order, or comma list to sweep");
  eval->add_option("--e", eo.energy, "energy budget E");
  eval->add_option("--seed", eo.seed, "experiment seed");
  eval->add_option("--methods", eo.methods, "comma list: KLT,LT,LT+GOQ,LT+LBG,LT+UNIFORM,ITERATIVE");
  eval->add_option("--k", eo.k_list, "latent dimension, or comma list to sweep");
  eval->add_option("--bits", eo.bits_list, "bit budget, or comma list to sweep");
  eval->add_option("--t", eo.synth_t, "synthetic profile count");
  eval->add_option("--n", eo.synth_n, "synthetic horizon length");
  eval->add_flag("--latent-only", eo.latent_only, "assign cells from the latent alone");
  eval->add_flag("--json", eo.json, "machine-readable output");

  GenOpts go;
  auto* gen = app.add_subcommand("gen", "write a synthetic daily-profile CSV");
  gen->add_option("--t", go.t, "profile count")->required();
  gen->add_option("--n", go.n, "horizon length")->required();
  gen->add_option("--seed", go.seed, "generator seed");
  gen->add_option("--out", go.out, "output CSV path")->required();
  gen->add_flag("--two-cluster", go.two_cluster, "two household types instead of one");
  gen->add_flag("--json", go.json, "machine-readable output");

  try {
    app.parse(argc, argv);

    if (solve->parsed()) return run_solve(so);
    if (fit->parsed()) {
      for (auto* sub : {fit_klt, fit_lt, fit_goq, fit_lbg, fit_uniform, fit_iter}) {
        if (!sub->parsed()) continue;
        fo.mode = sub->get_name();
        fo.has_p = sub->count("--p") > 0;
        fo.has_e = sub->count("--e") > 0;
        fo.has_seed = sub->count("--seed") > 0;
        fo.has_k = sub->count("--k") > 0;
        return run_fit(fo);
      }
    }
    if (eval->parsed()) {
      eo.has_p = eval->count("--p") > 0;
      eo.has_e = eval->count("--e") > 0;
      eo.has_seed = eval->count("--seed") > 0;
      eo.has_split = eval->count("--split") > 0;
      return run_eval(eo);
    }
    if (gen->parsed()) return run_gen(go);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
