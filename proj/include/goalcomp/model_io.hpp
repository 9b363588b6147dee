#pragma once

#include <goalcomp/codesign.hpp>

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace goalcomp {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Vec vec_from_json(const Json& a) {
  if (!a.is_array()) throw std::invalid_argument("model parse: expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw std::invalid_argument("model parse: non-numeric array entry");
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  }
  return v;
}

inline Mat mat_from_json(const Json& rows) {
  if (!rows.is_array() || rows.empty())
    throw std::invalid_argument("model parse: expected a non-empty array of rows");
  const std::size_t cols = rows[0].size();
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != cols)
      throw std::invalid_argument("model parse: ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!rows[r][c].is_number())
        throw std::invalid_argument("model parse: non-numeric matrix entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace detail

inline Json norm_to_json(const NormOrder& p) {
  if (p.is_inf()) return Json("inf");
  return Json(p.exponent());
}

inline NormOrder norm_from_json(const Json& j) {
  if (j.is_string()) return NormOrder::parse(j.get<std::string>());
  if (j.is_number_integer()) return NormOrder::finite(j.get<int>());
  throw std::invalid_argument("model parse: norm order must be an integer or \"inf\"");
}

inline Json task_to_json(const TaskSpec& spec) {
  Json j;
  j["p"] = norm_to_json(spec.p);
  j["e"] = spec.energy;
  return j;
}

inline TaskSpec task_from_json(const Json& j) {
  return TaskSpec(norm_from_json(j.at("p")), j.at("e").get<double>());
}

inline Json precoder_to_json(const Precoder& p, const std::optional<TaskSpec>& task = {},
                             bool trained = false) {
  Json j;
  j["format"] = "goalcomp-precoder";
  j["version"] = 1;
  j["k"] = p.latent_dim();
  j["n"] = p.dim();
  j["basis"] = detail::mat_to_json(p.basis);
  j["trained"] = trained;
  if (task) j["task"] = task_to_json(*task);
  return j;
}

inline Precoder precoder_from_json(const Json& j) {
  if (j.value("format", "") != std::string("goalcomp-precoder"))
    throw std::invalid_argument("model parse: not a precoder file");
  Precoder p{detail::mat_from_json(j.at("basis"))};
  if (p.latent_dim() != j.at("k").get<int>() || p.dim() != j.at("n").get<int>())
    throw std::invalid_argument("model parse: basis shape disagrees with k/n fields");
  return p;
}

/// Stable identifier of a serialized model, used to tie codebooks to the
/// precoder they were trained against.
inline std::string model_hash(const Json& j) {
  return detail::hash_hex(detail::fnv1a64(j.dump()));
}

inline Json codebook_to_json(const Codebook& cb, const std::string& precoder_hash) {
  Json j;
  j["format"] = "goalcomp-codebook";
  j["version"] = 1;
  j["mode"] = mode_name(cb.mode);
  j["bits"] = cb.bits;
  j["k"] = cb.latent_dim();
  j["reps"] = detail::mat_to_json(cb.reps);
  j["precoder_hash"] = precoder_hash;
  if (cb.mode == QuantizerMode::uniform_scalar) {
    Json g;
    g["lo"] = detail::vec_to_json(cb.grid.lo);
    g["hi"] = detail::vec_to_json(cb.grid.hi);
    g["bits"] = cb.grid.bits;
    j["grid"] = std::move(g);
  }
  return j;
}

/// Rebuilds a codebook against the precoder it will be used with; decoded and
/// allocation caches are refreshed here, so they are never serialized.
inline Codebook codebook_from_json(const Json& j, const Precoder& p,
                                   const TaskSpec* spec = nullptr) {
  if (j.value("format", "") != std::string("goalcomp-codebook"))
    throw std::invalid_argument("model parse: not a codebook file");
  Codebook cb;
  cb.mode = mode_from_name(j.at("mode").get<std::string>());
  cb.bits = j.at("bits").get<int>();
  cb.reps = detail::mat_from_json(j.at("reps"));
  if (cb.latent_dim() != j.at("k").get<int>())
    throw std::invalid_argument("model parse: representative shape disagrees with k field");
  if (cb.latent_dim() != p.latent_dim())
    throw std::invalid_argument("model parse: codebook does not match the precoder's latent size");
  if (j.contains("grid")) {
    cb.grid.lo = detail::vec_from_json(j["grid"].at("lo"));
    cb.grid.hi = detail::vec_from_json(j["grid"].at("hi"));
    cb.grid.bits = j["grid"].at("bits").get<std::vector<int>>();
  }
  detail::refresh_caches(cb, p, spec);
  return cb;
}

/// Codebook file that carries its precoder along, so it loads standalone.
inline Json codebook_bundle_to_json(const Precoder& p, const Codebook& cb,
                                    const std::optional<TaskSpec>& task = {},
                                    bool trained = false) {
  Json pj = precoder_to_json(p, task, trained);
  Json j = codebook_to_json(cb, model_hash(pj));
  j["precoder"] = std::move(pj);
  return j;
}

inline Json noise_to_json(const NoiseModel& nm) {
  Json j;
  j["mu"] = detail::vec_to_json(nm.mean);
  j["sigma"] = detail::mat_to_json(nm.cov);
  return j;
}

inline NoiseModel noise_from_json(const Json& j) {
  NoiseModel nm;
  nm.mean = detail::vec_from_json(j.at("mu"));
  nm.cov = detail::mat_from_json(j.at("sigma"));
  if (nm.cov.rows() != nm.mean.size() || nm.cov.cols() != nm.mean.size())
    throw std::invalid_argument("model parse: noise covariance shape mismatch");
  return nm;
}

inline Json codesign_to_json(const Precoder& p, const Codebook& cb, const NoiseModel& nm,
                             const std::vector<double>& loss_trace,
                             const std::optional<TaskSpec>& task = {}) {
  Json j;
  j["format"] = "goalcomp-codesign";
  j["version"] = 1;
  Json pj = precoder_to_json(p, task, true);
  j["codebook"] = codebook_to_json(cb, model_hash(pj));
  j["precoder"] = std::move(pj);
  j["noise"] = noise_to_json(nm);
  j["loss_trace"] = loss_trace;
  return j;
}

/// Any of the three model kinds, as read back from disk.
struct LoadedModel {
  std::string kind;  // "precoder" | "codebook" | "codesign"
  Precoder precoder;            // codesign and precoder kinds
  std::optional<Json> codebook_json;  // codebook kind: needs a precoder to finish loading
  std::optional<Codebook> codebook;   // codesign kind: fully rebuilt
  std::optional<NoiseModel> noise;
  std::optional<TaskSpec> task;
  std::vector<double> loss_trace;
  bool trained = false;
};

inline void save_json(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return j;
}

inline LoadedModel load_model(const std::string& path, const TaskSpec* spec = nullptr) {
  const Json j = load_json(path);
  const std::string format = j.value("format", "");
  LoadedModel m;
  if (format == "goalcomp-precoder") {
    m.kind = "precoder";
    m.precoder = precoder_from_json(j);
    if (j.contains("task")) m.task = task_from_json(j["task"]);
    m.trained = j.value("trained", false);
  } else if (format == "goalcomp-codebook") {
    m.kind = "codebook";
    m.codebook_json = j;
    if (j.contains("precoder")) {
      m.precoder = precoder_from_json(j["precoder"]);
      if (j["precoder"].contains("task")) m.task = task_from_json(j["precoder"]["task"]);
      m.trained = j["precoder"].value("trained", false);
      const TaskSpec* cache_spec = spec ? spec : (m.task ? &*m.task : nullptr);
      m.codebook = codebook_from_json(j, m.precoder, cache_spec);
    }
  } else if (format == "goalcomp-codesign") {
    m.kind = "codesign";
    m.precoder = precoder_from_json(j.at("precoder"));
    if (j["precoder"].contains("task")) m.task = task_from_json(j["precoder"]["task"]);
    m.trained = j["precoder"].value("trained", false);
    const TaskSpec* cache_spec = spec ? spec : (m.task ? &*m.task : nullptr);
    m.codebook = codebook_from_json(j.at("codebook"), m.precoder, cache_spec);
    m.noise = noise_from_json(j.at("noise"));
    if (j.contains("loss_trace")) m.loss_trace = j["loss_trace"].get<std::vector<double>>();
  } else {
    throw std::runtime_error(path + ": unrecognized model format");
  }
  return m;
}

}  // namespace goalcomp
