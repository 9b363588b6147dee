#pragma once

#include <goalcomp/model_io.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace goalcomp {

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

enum class Method { klt, lt, lt_goq, lt_lbg, lt_uniform, iterative };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::klt: return "KLT";
    case Method::lt: return "LT";
    case Method::lt_goq: return "LT+GOQ";
    case Method::lt_lbg: return "LT+LBG";
    case Method::lt_uniform: return "LT+UNIFORM";
    case Method::iterative: return "ITERATIVE";
  }
  throw std::logic_error("method_name: unknown method");
}

inline Method method_from_name(const std::string& s) {
  if (s == "KLT") return Method::klt;
  if (s == "LT") return Method::lt;
  if (s == "LT+GOQ") return Method::lt_goq;
  if (s == "LT+LBG") return Method::lt_lbg;
  if (s == "LT+UNIFORM") return Method::lt_uniform;
  if (s == "ITERATIVE") return Method::iterative;
  throw std::invalid_argument("method_from_name: unknown method '" + s + "'");
}

/// Relative squared optimality loss in percent:
/// 100 * sum (U_perfect - U_C)^2 / sum U_perfect^2.
inline double rsol(const Vec& u_perfect, const Vec& u_compressed) {
  if (u_perfect.size() < 1) throw std::invalid_argument("rsol: empty utility vectors");
  if (u_perfect.size() != u_compressed.size())
    throw std::invalid_argument("rsol: utility vectors differ in length");
  const double denom = u_perfect.squaredNorm();
  if (denom <= 0.0)
    throw std::invalid_argument("rsol: sum of squared perfect utilities is zero");
  return 100.0 * (u_perfect - u_compressed).squaredNorm() / denom;
}

/// Per-sample utilities reached through the compression pipeline: precoder
/// reconstruction alone when cb is null, otherwise quantized reconstruction
/// under the codebook's own assignment rule.
inline Vec pipeline_utilities(const Dataset& data, const Precoder& p, const Codebook* cb,
                              const TaskSpec& spec, bool latent_only = false) {
  const int t = data.size();
  Vec u(t);
  if (!cb) {
    const Mat recon = (data.profiles * p.basis.transpose()) * p.basis;
    detail::for_chunks(t, detail::kChunk, [&](std::int64_t, std::int64_t begin, std::int64_t end) {
      for (std::int64_t i = begin; i < end; ++i) {
        const Vec l = data.sample(static_cast<int>(i));
        const Vec lhat = recon.row(static_cast<Eigen::Index>(i)).transpose();
        u(static_cast<Eigen::Index>(i)) =
            utility(solve_waterfill(lhat, spec).allocation, l, spec);
      }
    });
    return u;
  }
  const auto cells = assign_cells(*cb, data, p, spec, latent_only);
  const Mat alloc =
      cb->allocations.size() ? cb->allocations : detail::computed_allocations(*cb, spec);
  detail::for_chunks(t, detail::kChunk, [&](std::int64_t, std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      const Vec l = data.sample(static_cast<int>(i));
      u(static_cast<Eigen::Index>(i)) =
          detail::rep_utility(alloc, cells[static_cast<std::size_t>(i)], l, spec);
    }
  });
  return u;
}

struct ExperimentConfig {
  TaskSpec spec{NormOrder::inf(), 50.0};
  std::vector<int> k_values{1};
  std::vector<int> bit_values{4};
  std::vector<NormOrder> p_values;  // empty: use spec.p only
  std::vector<Method> methods{Method::klt, Method::lt, Method::lt_goq, Method::lt_lbg,
                              Method::lt_uniform};
  std::uint64_t seed = 0;
  double split_fraction = 0.8;
  std::string dataset_path;  // empty: synthetic
  int synth_t = 1000;
  int synth_n = 48;
  SyntheticParams synth;
  TrainConfig train;
  bool latent_only_eval = false;
};

/// The one axis allowed to hold more than a single value.
enum class SweepAxis { bits, k, p };

inline std::string axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::bits: return "bits";
    case SweepAxis::k: return "k";
    case SweepAxis::p: return "p";
  }
  throw std::logic_error("axis_name: unknown axis");
}

inline SweepAxis sweep_axis(const ExperimentConfig& cfg) {
  if (cfg.k_values.empty() || cfg.bit_values.empty() || cfg.methods.empty())
    throw std::invalid_argument("experiment: every sweep list must be non-empty");
  if (cfg.split_fraction <= 0.0 || cfg.split_fraction >= 1.0)
    throw std::invalid_argument("experiment: split fraction must lie in (0, 1)");
  int wide = 0;
  SweepAxis axis = SweepAxis::bits;
  if (cfg.bit_values.size() > 1) {
    ++wide;
    axis = SweepAxis::bits;
  }
  if (cfg.k_values.size() > 1) {
    ++wide;
    axis = SweepAxis::k;
  }
  if (cfg.p_values.size() > 1) {
    ++wide;
    axis = SweepAxis::p;
  }
  if (wide > 1)
    throw std::invalid_argument("experiment: only one of bits/k/p may sweep multiple values");
  return axis;
}

struct MethodResult {
  std::string method;
  std::string sweep_label;  // value of the sweep axis at this point
  int k = 0;
  int bits = 0;
  std::string p;
  double rsol_train = 0.0;
  double rsol_test = 0.0;
  std::vector<double> trace;
  double runtime_sec = 0.0;
  bool failed = false;
  std::string error;
};

struct Report {
  Json config;
  std::uint64_t seed = 0;
  std::string sweep_axis;
  std::vector<MethodResult> results;
};

inline Json experiment_config_to_json(const ExperimentConfig& cfg) {
  Json j;
  j["task"] = task_to_json(cfg.spec);
  j["k_values"] = cfg.k_values;
  j["bit_values"] = cfg.bit_values;
  Json ps = Json::array();
  for (const auto& p : cfg.p_values) ps.push_back(norm_to_json(p));
  j["p_values"] = std::move(ps);
  Json ms = Json::array();
  for (const auto m : cfg.methods) ms.push_back(method_name(m));
  j["methods"] = std::move(ms);
  j["seed"] = cfg.seed;
  j["split_fraction"] = cfg.split_fraction;
  j["dataset_path"] = cfg.dataset_path;
  j["synth_t"] = cfg.synth_t;
  j["synth_n"] = cfg.synth_n;
  Json sp;
  sp["base_load"] = cfg.synth.base_load;
  sp["noise_sigma"] = cfg.synth.noise_sigma;
  sp["two_cluster"] = cfg.synth.two_cluster;
  j["synthetic"] = std::move(sp);
  Json tr;
  tr["max_iterations"] = cfg.train.max_iterations;
  tr["rel_tol"] = cfg.train.rel_tol;
  tr["codebook_rounds"] = cfg.train.codebook_rounds;
  tr["codebook_restarts"] = cfg.train.codebook_restarts;
  tr["local_refine"] = cfg.train.local_refine;
  tr["outer_rounds"] = cfg.train.outer_rounds;
  tr["noisy_draws"] = cfg.train.noisy_draws;
  j["train"] = std::move(tr);
  j["latent_only_eval"] = cfg.latent_only_eval;
  return j;
}

inline ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig cfg;
  if (j.contains("task")) cfg.spec = task_from_json(j["task"]);
  if (j.contains("k_values")) cfg.k_values = j["k_values"].get<std::vector<int>>();
  if (j.contains("bit_values")) cfg.bit_values = j["bit_values"].get<std::vector<int>>();
  if (j.contains("p_values")) {
    cfg.p_values.clear();
    for (const auto& p : j["p_values"]) cfg.p_values.push_back(norm_from_json(p));
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j["methods"]) cfg.methods.push_back(method_from_name(m.get<std::string>()));
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("split_fraction")) cfg.split_fraction = j["split_fraction"].get<double>();
  if (j.contains("dataset_path")) cfg.dataset_path = j["dataset_path"].get<std::string>();
  if (j.contains("synth_t")) cfg.synth_t = j["synth_t"].get<int>();
  if (j.contains("synth_n")) cfg.synth_n = j["synth_n"].get<int>();
  if (j.contains("synthetic")) {
    const auto& sp = j["synthetic"];
    if (sp.contains("base_load")) cfg.synth.base_load = sp["base_load"].get<double>();
    if (sp.contains("noise_sigma")) cfg.synth.noise_sigma = sp["noise_sigma"].get<double>();
    if (sp.contains("two_cluster")) cfg.synth.two_cluster = sp["two_cluster"].get<bool>();
  }
  if (j.contains("train")) {
    const auto& tr = j["train"];
    if (tr.contains("max_iterations")) cfg.train.max_iterations = tr["max_iterations"].get<int>();
    if (tr.contains("rel_tol")) cfg.train.rel_tol = tr["rel_tol"].get<double>();
    if (tr.contains("codebook_rounds"))
      cfg.train.codebook_rounds = tr["codebook_rounds"].get<int>();
    if (tr.contains("codebook_restarts"))
      cfg.train.codebook_restarts = tr["codebook_restarts"].get<int>();
    if (tr.contains("local_refine")) cfg.train.local_refine = tr["local_refine"].get<bool>();
    if (tr.contains("outer_rounds")) cfg.train.outer_rounds = tr["outer_rounds"].get<int>();
    if (tr.contains("noisy_draws")) cfg.train.noisy_draws = tr["noisy_draws"].get<int>();
  }
  if (j.contains("latent_only_eval")) cfg.latent_only_eval = j["latent_only_eval"].get<bool>();
  return cfg;
}

/// Trains every requested method at every sweep point on the train split and
/// reports RSOL on both splits. Failures are captured per (method, point).
/// Within a bit sweep, consecutive budgets chain the GOQ start through
/// split-and-refine, and the KLT/LT trainings are reused across points that
/// share (K, p).
inline Report run_experiment(const ExperimentConfig& cfg) {
  const SweepAxis axis = sweep_axis(cfg);
  Dataset data = cfg.dataset_path.empty()
                     ? gen_synthetic(cfg.synth_t, cfg.synth_n, cfg.seed, cfg.synth)
                     : load_profiles_csv(cfg.dataset_path);
  auto [train, test] = split_dataset(data, cfg.split_fraction, cfg.seed);
  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed;

  Report report;
  report.config = experiment_config_to_json(cfg);
  report.seed = cfg.seed;
  report.sweep_axis = axis_name(axis);

  struct Point {
    int k;
    int bits;
    NormOrder p;
    std::string label;
  };
  std::vector<Point> points;
  const std::vector<NormOrder> ps =
      cfg.p_values.empty() ? std::vector<NormOrder>{cfg.spec.p} : cfg.p_values;
  for (const auto& p : ps)
    for (const int k : cfg.k_values)
      for (const int bits : cfg.bit_values) {
        std::string label;
        switch (axis) {
          case SweepAxis::bits: label = std::to_string(bits); break;
          case SweepAxis::k: label = std::to_string(k); break;
          case SweepAxis::p: label = p.str(); break;
        }
        points.push_back({k, bits, p, std::move(label)});
      }

  // Training caches shared across sweep points.
  std::map<std::string, Precoder> klt_cache;
  std::map<std::string, PrecoderFit> lt_cache;
  std::map<std::string, Mat> goq_prev;  // per (k, p): last trained reps + bits

  auto point_spec = [&](const Point& pt) { return TaskSpec(pt.p, cfg.spec.energy); };
  auto kp_key = [](const Point& pt) {
    return std::to_string(pt.k) + "/" + pt.p.str();
  };

  for (const auto& pt : points) {
    const TaskSpec spec = point_spec(pt);
    const Vec u_train = perfect_utilities(train, spec);
    const Vec u_test = perfect_utilities(test, spec);
    for (const Method method : cfg.methods) {
      MethodResult row;
      row.method = method_name(method);
      row.sweep_label = pt.label;
      row.k = pt.k;
      row.bits = pt.bits;
      row.p = pt.p.str();
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const Precoder* precoder = nullptr;
        const Codebook* codebook = nullptr;
        Precoder precoder_storage;
        Codebook cb_storage;
        std::vector<double> trace;
        switch (method) {
          case Method::klt: {
            auto it = klt_cache.find(kp_key(pt));
            if (it == klt_cache.end())
              it = klt_cache.emplace(kp_key(pt), klt_basis(train, pt.k)).first;
            precoder = &it->second;
            trace = {empirical_loss(it->second, train, spec)};
            break;
          }
          case Method::lt: {
            auto it = lt_cache.find(kp_key(pt));
            if (it == lt_cache.end())
              it = lt_cache.emplace(kp_key(pt), fit_linear_precoder(train, spec, pt.k, tcfg))
                       .first;
            precoder = &it->second.precoder;
            trace = it->second.trace.loss;
            break;
          }
          case Method::lt_goq:
          case Method::lt_lbg:
          case Method::lt_uniform: {
            auto it = lt_cache.find(kp_key(pt));
            if (it == lt_cache.end())
              it = lt_cache.emplace(kp_key(pt), fit_linear_precoder(train, spec, pt.k, tcfg))
                       .first;
            precoder = &it->second.precoder;
            if (method == Method::lt_goq) {
              const Mat* start = nullptr;
              Mat start_storage;
              const auto prev = goq_prev.find(kp_key(pt));
              if (prev != goq_prev.end() &&
                  prev->second.rows() * 2 == (Eigen::Index{1} << pt.bits)) {
                start_storage = split_reps(prev->second, cfg.seed);
                start = &start_storage;
              }
              auto fit = fit_goq(train, *precoder, spec, pt.bits, tcfg, start);
              trace = std::move(fit.trace);
              cb_storage = std::move(fit.codebook);
              goq_prev[kp_key(pt)] = cb_storage.reps;
            } else if (method == Method::lt_lbg) {
              auto fit = fit_lbg(train, *precoder, pt.bits, tcfg);
              trace = std::move(fit.trace);
              cb_storage = std::move(fit.codebook);
            } else {
              cb_storage = uniform_scalar_quantizer(train, *precoder, pt.bits);
            }
            detail::refresh_caches(cb_storage, *precoder, &spec);
            codebook = &cb_storage;
            break;
          }
          case Method::iterative: {
            auto st = fit_iterative(train, spec, pt.k, pt.bits, tcfg);
            trace = std::move(st.loss_trace);
            cb_storage = std::move(st.best.codebook);
            precoder_storage = std::move(st.best.precoder);
            precoder = &precoder_storage;
            detail::refresh_caches(cb_storage, *precoder, &spec);
            codebook = &cb_storage;
            break;
          }
        }
        const Vec uc_train =
            pipeline_utilities(train, *precoder, codebook, spec, cfg.latent_only_eval);
        const Vec uc_test =
            pipeline_utilities(test, *precoder, codebook, spec, cfg.latent_only_eval);
        row.rsol_train = rsol(u_train, uc_train);
        row.rsol_test = rsol(u_test, uc_test);
        row.trace = std::move(trace);
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      row.runtime_sec =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      report.results.push_back(std::move(row));
    }
  }
  return report;
}

inline Json report_to_json(const Report& report, bool include_runtimes = true) {
  Json j;
  j["config"] = report.config;
  j["seed"] = report.seed;
  j["sweep_axis"] = report.sweep_axis;
  Json rows = Json::array();
  for (const auto& r : report.results) {
    Json row;
    row["method"] = r.method;
    row["sweep_label"] = r.sweep_label;
    row["k"] = r.k;
    row["bits"] = r.bits;
    row["p"] = r.p;
    row["failed"] = r.failed;
    if (r.failed) {
      row["error"] = r.error;
    } else {
      row["rsol_train"] = r.rsol_train;
      row["rsol_test"] = r.rsol_test;
      row["trace"] = r.trace;
    }
    if (include_runtimes) row["runtime_sec"] = r.runtime_sec;
    rows.push_back(std::move(row));
  }
  j["results"] = std::move(rows);
  return j;
}

/// Hash of the report with runtime fields excluded: identical config + seed
/// must reproduce it byte for byte.
inline std::string report_determinism_hash(const Report& report) {
  return model_hash(report_to_json(report, false));
}

/// Writes report.json plus one plot-ready CSV for the sweep axis. Failed rows
/// appear in the CSV with nan entries so every (method, point) pair is present.
inline void emit_report(const Report& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create report directory: " + dir);
  Json j = report_to_json(report);
  j["determinism_hash"] = report_determinism_hash(report);
  save_json(j, (fs::path(dir) / "report.json").string());

  const std::string csv_path = (fs::path(dir) / ("sweep_" + report.sweep_axis + ".csv")).string();
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + csv_path);
  out << "sweep_value,method,rsol_train,rsol_test\n";
  for (const auto& r : report.results) {
    out << r.sweep_label << ',' << r.method << ',';
    if (r.failed) {
      out << "nan,nan\n";
    } else {
      out << detail::format_double(r.rsol_train) << ',' << detail::format_double(r.rsol_test)
          << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + csv_path);
}

}  // namespace goalcomp
