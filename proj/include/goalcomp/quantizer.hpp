#pragma once

#include <goalcomp/detail/parallel.hpp>
#include <goalcomp/detail/rng.hpp>
#include <goalcomp/precoder.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace goalcomp {

enum class QuantizerMode { goal_oriented, lbg, uniform_scalar };

inline std::string mode_name(QuantizerMode m) {
  switch (m) {
    case QuantizerMode::goal_oriented: return "GOAL_ORIENTED";
    case QuantizerMode::lbg: return "LBG";
    case QuantizerMode::uniform_scalar: return "UNIFORM_SCALAR";
  }
  throw std::logic_error("mode_name: unknown mode");
}

inline QuantizerMode mode_from_name(const std::string& s) {
  if (s == "GOAL_ORIENTED") return QuantizerMode::goal_oriented;
  if (s == "LBG") return QuantizerMode::lbg;
  if (s == "UNIFORM_SCALAR") return QuantizerMode::uniform_scalar;
  throw std::invalid_argument("mode_from_name: unknown mode '" + s + "'");
}

/// Per-dimension midrise grid of the uniform scalar quantizer.
struct UniformGrid {
  Vec lo, hi;
  std::vector<int> bits;
};

/// M = 2^bits latent representatives plus caches derived from the precoder:
/// decoded rows h(r_m) and, when built against a task, their allocations
/// x*(h(r_m)), the expensive half of every goal-error evaluation.
struct Codebook {
  QuantizerMode mode = QuantizerMode::goal_oriented;
  int bits = 0;
  Mat reps;         // M x K
  UniformGrid grid;  // uniform_scalar only
  Mat decoded;      // M x N
  Mat allocations;  // M x N; empty when no task was supplied

  int count() const { return static_cast<int>(reps.rows()); }
  int latent_dim() const { return static_cast<int>(reps.cols()); }
};

using CellAssignment = std::vector<int>;

namespace detail {

inline void refresh_caches(Codebook& cb, const Precoder& p, const TaskSpec* spec) {
  cb.decoded = cb.reps * p.basis;
  if (spec) {
    cb.allocations.resize(cb.reps.rows(), p.basis.cols());
    for (int m = 0; m < cb.count(); ++m)
      cb.allocations.row(m) =
          solve_waterfill(cb.decoded.row(m).transpose(), *spec).allocation.transpose();
  } else {
    cb.allocations.resize(0, 0);
  }
}

// u(x*(h(r_m)); l) from the cached allocation row, without temporaries.
inline double rep_utility(const Mat& allocations, int m, const Vec& l, const TaskSpec& spec) {
  const Eigen::Index n = l.size();
  if (spec.p.is_inf()) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double t = allocations(m, j) + l(j);
      if (t > peak) peak = t;
    }
    return -peak;
  }
  Vec total = allocations.row(m).transpose() + l;
  return -lp_norm(total, spec.p);
}

inline double squared(double x) { return x * x; }

// Allocations for a codebook that was built without a task attached.
inline Mat computed_allocations(const Codebook& cb, const TaskSpec& spec) {
  Mat alloc(cb.decoded.rows(), cb.decoded.cols());
  for (int m = 0; m < cb.count(); ++m)
    alloc.row(m) = solve_waterfill(cb.decoded.row(m).transpose(), spec).allocation.transpose();
  return alloc;
}

struct AssignResult {
  CellAssignment cell;
  std::vector<double> error;  // per-sample assigned goal error / squared distance
};

inline AssignResult assign_goal(const Mat& allocations, const Dataset& data, const Vec& u_perfect,
                                const TaskSpec& spec) {
  const int t = data.size();
  const int m_count = static_cast<int>(allocations.rows());
  AssignResult res;
  res.cell.resize(static_cast<std::size_t>(t));
  res.error.resize(static_cast<std::size_t>(t));
  for_chunks(t, kChunk, [&](std::int64_t, std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      const Vec l = data.sample(static_cast<int>(i));
      const double up = u_perfect(static_cast<Eigen::Index>(i));
      int best = 0;
      double best_err = std::numeric_limits<double>::infinity();
      for (int m = 0; m < m_count; ++m) {
        const double err = squared(up - rep_utility(allocations, m, l, spec));
        if (err < best_err) {
          best_err = err;
          best = m;
        }
      }
      res.cell[static_cast<std::size_t>(i)] = best;
      res.error[static_cast<std::size_t>(i)] = best_err;
    }
  });
  return res;
}

inline AssignResult assign_nearest(const Mat& reps, const Mat& latents) {
  const int t = static_cast<int>(latents.rows());
  const int m_count = static_cast<int>(reps.rows());
  AssignResult res;
  res.cell.resize(static_cast<std::size_t>(t));
  res.error.resize(static_cast<std::size_t>(t));
  for_chunks(t, kChunk, [&](std::int64_t, std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int m = 0; m < m_count; ++m) {
        const double d = (latents.row(static_cast<Eigen::Index>(i)) - reps.row(m)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = m;
        }
      }
      res.cell[static_cast<std::size_t>(i)] = best;
      res.error[static_cast<std::size_t>(i)] = best_d;
    }
  });
  return res;
}

inline bool row_present(const Mat& rows, int row_count, const Vec& candidate) {
  for (int r = 0; r < row_count; ++r)
    if (rows.row(r).transpose() == candidate) return true;
  return false;
}

}  // namespace detail

/// Cell of every sample under the codebook's own rule: goal error for GOQ
/// (squared utility gap), squared latent distance otherwise.
/// latent_only forces the distance rule, for ablation of the goal-aware encoder.
inline CellAssignment assign_cells(const Codebook& cb, const Dataset& data, const Precoder& p,
                                   const TaskSpec& spec, bool latent_only = false) {
  if (cb.count() < 1) throw std::invalid_argument("assign_cells: empty codebook");
  if (cb.latent_dim() != p.latent_dim())
    throw std::invalid_argument("assign_cells: codebook/precoder dimension mismatch");
  if (cb.mode == QuantizerMode::goal_oriented && !latent_only) {
    const Vec u_perfect = perfect_utilities(data, spec);
    const Mat alloc =
        cb.allocations.size() ? cb.allocations : detail::computed_allocations(cb, spec);
    return detail::assign_goal(alloc, data, u_perfect, spec).cell;
  }
  return detail::assign_nearest(cb.reps, encode_all(p, data)).cell;
}

namespace detail {

// Pattern search around a representative, accepting only strict improvements.
template <class CostFn>
void refine_rep(Vec& rep, double& cost, const Vec& scale, CostFn&& cost_of) {
  Vec step = scale;
  for (int round = 0; round < 8; ++round) {
    bool improved = false;
    for (Eigen::Index k = 0; k < rep.size(); ++k) {
      for (const double dir : {1.0, -1.0}) {
        Vec cand = rep;
        cand(k) += dir * step(k);
        const double c = cost_of(cand);
        if (c < cost) {
          rep = cand;
          cost = c;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
}

}  // namespace detail

/// One update sweep. GOQ cells take the best of {member latents, cell
/// centroid, incumbent representative} under the summed goal error; LBG cells
/// take the centroid. Empty cells keep their representative.
inline Codebook update_representatives(const Codebook& cb, const CellAssignment& assign,
                                       const Dataset& data, const Precoder& p,
                                       const TaskSpec& spec, bool local_refine = false) {
  const int t = data.size();
  if (static_cast<int>(assign.size()) != t)
    throw std::invalid_argument("update_representatives: assignment size mismatch");
  std::vector<std::vector<int>> members(static_cast<std::size_t>(cb.count()));
  for (int i = 0; i < t; ++i) {
    const int m = assign[static_cast<std::size_t>(i)];
    if (m < 0 || m >= cb.count())
      throw std::invalid_argument("update_representatives: cell index out of range");
    members[static_cast<std::size_t>(m)].push_back(i);
  }
  if (std::all_of(members.begin(), members.end(), [](const auto& v) { return v.empty(); }))
    throw std::invalid_argument("update_representatives: all cells empty");

  const Mat latents = encode_all(p, data);
  Codebook out = cb;

  if (cb.mode != QuantizerMode::goal_oriented) {
    for (int m = 0; m < cb.count(); ++m) {
      const auto& cell = members[static_cast<std::size_t>(m)];
      if (cell.empty()) continue;
      Vec centroid = Vec::Zero(cb.latent_dim());
      for (const int i : cell) centroid += latents.row(i).transpose();
      out.reps.row(m) = (centroid / static_cast<double>(cell.size())).transpose();
    }
    detail::refresh_caches(out, p, nullptr);
    return out;
  }

  const Vec u_perfect = perfect_utilities(data, spec);
  detail::for_chunks(cb.count(), 1, [&](std::int64_t, std::int64_t begin, std::int64_t end) {
    for (std::int64_t mm = begin; mm < end; ++mm) {
      const int m = static_cast<int>(mm);
      const auto& cell = members[static_cast<std::size_t>(m)];
      if (cell.empty()) continue;
      auto cell_cost = [&](const Vec& rep) {
        const Vec x = solve_waterfill(p.basis.transpose() * rep, spec).allocation;
        double c = 0.0;
        for (const int i : cell) {
          const Vec l = data.sample(i);
          c += detail::squared(u_perfect(i) - utility(x, l, spec));
        }
        return c;
      };
      // Candidates in order: member latents, their centroid, then the
      // incumbent. Ties keep the earliest, so a singleton cell returns its
      // sample's latent; the incumbent's presence makes the sweep monotone.
      Vec best_rep = latents.row(cell.front()).transpose();
      double best_cost = cell_cost(best_rep);
      Vec centroid = best_rep;
      for (std::size_t ci = 1; ci < cell.size(); ++ci) {
        const Vec cand = latents.row(cell[ci]).transpose();
        centroid += cand;
        const double c = cell_cost(cand);
        if (c < best_cost) {
          best_cost = c;
          best_rep = cand;
        }
      }
      centroid /= static_cast<double>(cell.size());
      for (const Vec& cand : {centroid, Vec(cb.reps.row(m).transpose())}) {
        const double c = cell_cost(cand);
        if (c < best_cost) {
          best_cost = c;
          best_rep = cand;
        }
      }
      if (local_refine) {
        Vec scale(cb.latent_dim());
        for (Eigen::Index k = 0; k < scale.size(); ++k) {
          double lo = latents(cell.front(), k), hi = lo;
          for (const int i : cell) {
            lo = std::min(lo, latents(i, k));
            hi = std::max(hi, latents(i, k));
          }
          const double spread = hi - lo;
          scale(k) = spread > 0.0 ? 0.5 * spread : 1e-3 * (1.0 + std::abs(best_rep(k)));
        }
        detail::refine_rep(best_rep, best_cost, scale, cell_cost);
      }
      out.reps.row(m) = best_rep.transpose();
    }
  });
  detail::refresh_caches(out, p, &spec);
  return out;
}

/// Total goal loss of a codebook on a dataset under its own encoding rule:
/// sum over samples of |u(x*(l); l) - u(x*(h(q(l))); l)|^2 (a sum, not a mean).
inline double goal_loss(const Codebook& cb, const Dataset& data, const Precoder& p,
                        const TaskSpec& spec, bool latent_only = false) {
  const Vec u_perfect = perfect_utilities(data, spec);
  const Mat alloc = cb.allocations.size() ? cb.allocations : detail::computed_allocations(cb, spec);
  const bool goal_rule = cb.mode == QuantizerMode::goal_oriented && !latent_only;
  const int t = data.size();
  const std::int64_t n_chunks = (t + detail::kChunk - 1) / detail::kChunk;
  std::vector<double> partial(static_cast<std::size_t>(n_chunks), 0.0);
  const Mat latents = goal_rule ? Mat() : encode_all(p, data);
  detail::for_chunks(t, detail::kChunk, [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
    double s = 0.0;
    for (std::int64_t i = begin; i < end; ++i) {
      const Vec l = data.sample(static_cast<int>(i));
      const double up = u_perfect(static_cast<Eigen::Index>(i));
      if (goal_rule) {
        double best = std::numeric_limits<double>::infinity();
        for (int m = 0; m < cb.count(); ++m)
          best = std::min(best, detail::squared(up - detail::rep_utility(alloc, m, l, spec)));
        s += best;
      } else {
        int best_m = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int m = 0; m < cb.count(); ++m) {
          const double d = (latents.row(static_cast<Eigen::Index>(i)) - cb.reps.row(m)).squaredNorm();
          if (d < best_d) {
            best_d = d;
            best_m = m;
          }
        }
        s += detail::squared(up - detail::rep_utility(alloc, best_m, l, spec));
      }
    }
    partial[static_cast<std::size_t>(c)] = s;
  });
  double sum = 0.0;
  for (const double s : partial) sum += s;
  return sum;
}

struct CodebookFit {
  Codebook codebook;
  std::vector<double> trace;  // loss after init and after every round
};

namespace detail {

// M pairwise-distinct initial representatives drawn from the latent rows.
// When the data holds fewer than M distinct latents, the remainder are
// distinct jittered copies; their cells simply stay empty.
inline Mat init_reps_from_latents(const Mat& latents, int m_count, Rng& rng) {
  const int t = static_cast<int>(latents.rows());
  const int k = static_cast<int>(latents.cols());
  Mat reps(m_count, k);
  int chosen = 0;
  int attempts = 0;
  while (chosen < m_count && attempts < 64 * m_count) {
    ++attempts;
    const Vec cand = latents.row(rng.below(t)).transpose();
    if (!row_present(reps, chosen, cand)) reps.row(chosen++) = cand.transpose();
  }
  if (chosen < m_count) {
    // Deterministic sweep over the remaining distinct rows.
    for (int i = 0; i < t && chosen < m_count; ++i) {
      const Vec cand = latents.row(i).transpose();
      if (!row_present(reps, chosen, cand)) reps.row(chosen++) = cand.transpose();
    }
  }
  const double scale =
      1.0 + (latents.size() ? latents.cwiseAbs().maxCoeff() : 0.0);
  int fill = 0;
  while (chosen < m_count) {
    Vec cand = latents.row(fill % t).transpose();
    double eps = 1e-6 * scale * (1 + fill);
    cand(fill % k) += eps;
    while (row_present(reps, chosen, cand)) {
      eps *= 2.0;
      cand(fill % k) += eps;
    }
    reps.row(chosen++) = cand.transpose();
    ++fill;
  }
  return reps;
}

// Replace representatives of empty cells by latents of the worst-error
// samples, skipping values already present. Returns true if anything changed.
inline bool reseed_empty_cells(Codebook& cb, const AssignResult& assign, const Mat& latents) {
  const int m_count = cb.count();
  std::vector<bool> nonempty(static_cast<std::size_t>(m_count), false);
  for (const int m : assign.cell) nonempty[static_cast<std::size_t>(m)] = true;
  std::vector<int> by_error(assign.error.size());
  std::iota(by_error.begin(), by_error.end(), 0);
  std::sort(by_error.begin(), by_error.end(), [&](int a, int b) {
    if (assign.error[static_cast<std::size_t>(a)] != assign.error[static_cast<std::size_t>(b)])
      return assign.error[static_cast<std::size_t>(a)] > assign.error[static_cast<std::size_t>(b)];
    return a < b;
  });
  bool changed = false;
  std::size_t next = 0;
  for (int m = 0; m < m_count; ++m) {
    if (nonempty[static_cast<std::size_t>(m)]) continue;
    while (next < by_error.size()) {
      const Vec cand = latents.row(by_error[next]).transpose();
      ++next;
      if (!row_present(cb.reps, m_count, cand)) {
        cb.reps.row(m) = cand.transpose();
        changed = true;
        break;
      }
    }
  }
  return changed;
}

// Post-run guard: exact duplicate rows (possible when distinct cells settle on
// the same latent) are re-seeded so the returned codebook is pairwise distinct.
inline bool dedupe_reps(Codebook& cb, const AssignResult& assign, const Mat& latents) {
  bool changed = false;
  for (int m = 1; m < cb.count(); ++m) {
    bool dup = false;
    for (int r = 0; r < m; ++r)
      if (cb.reps.row(r) == cb.reps.row(m)) dup = true;
    if (!dup) continue;
    AssignResult fake = assign;
    for (auto& c : fake.cell)
      if (c == m) c = 0;  // treat the duplicate's cell as empty
    Codebook tmp = cb;
    if (reseed_empty_cells(tmp, fake, latents)) {
      cb.reps.row(m) = tmp.reps.row(m);
      changed = true;
    }
  }
  return changed;
}

}  // namespace detail

/// Goal-oriented codebook training: alternate goal-error assignment and
/// medoid-plus-centroid updates from a seeded random initialization (plus
/// optional caller-provided
/// starting representatives, e.g. split-and-refine across bit budgets). Runs
/// cfg.codebook_restarts seeded starts and keeps the lowest final loss; each
/// run's trace is non-increasing.
inline CodebookFit fit_goq(const Dataset& data, const Precoder& p, const TaskSpec& spec, int bits,
                           const TrainConfig& cfg = {}, const Mat* start_reps = nullptr) {
  if (bits < 1 || bits > 20)
    throw std::invalid_argument("fit_goq: bits must lie in [1, 20], got " + std::to_string(bits));
  const int m_count = 1 << bits;
  const Mat latents = encode_all(p, data);
  const Vec u_perfect = perfect_utilities(data, spec);
  if (start_reps && (start_reps->rows() != m_count || start_reps->cols() != p.latent_dim()))
    throw std::invalid_argument("fit_goq: starting representatives have the wrong shape");

  auto run = [&](Mat reps0) {
    Codebook cb;
    cb.mode = QuantizerMode::goal_oriented;
    cb.bits = bits;
    cb.reps = std::move(reps0);
    detail::refresh_caches(cb, p, &spec);
    CodebookFit fit;
    auto assign = detail::assign_goal(cb.allocations, data, u_perfect, spec);
    double loss = 0.0;
    for (const double e : assign.error) loss += e;
    fit.trace.push_back(loss);
    for (int round = 0; round < cfg.codebook_rounds && loss > 0.0; ++round) {
      if (detail::reseed_empty_cells(cb, assign, latents)) detail::refresh_caches(cb, p, &spec);
      cb = update_representatives(cb, assign.cell, data, p, spec, cfg.local_refine);
      assign = detail::assign_goal(cb.allocations, data, u_perfect, spec);
      double new_loss = 0.0;
      for (const double e : assign.error) new_loss += e;
      const double prev = loss;
      loss = new_loss;
      fit.trace.push_back(loss);
      if ((prev - loss) / prev < cfg.rel_tol) break;
    }
    if (detail::dedupe_reps(cb, assign, latents)) {
      detail::refresh_caches(cb, p, &spec);
      const double deduped = goal_loss(cb, data, p, spec);
      if (deduped < fit.trace.back()) fit.trace.push_back(deduped);
    }
    fit.codebook = std::move(cb);
    return fit;
  };

  CodebookFit best;
  bool have_best = false;
  if (start_reps) {
    best = run(*start_reps);
    have_best = true;
  }
  const int restarts = std::max(1, cfg.codebook_restarts);
  for (int r = 0; r < restarts; ++r) {
    detail::Rng rng(detail::derive_seed(cfg.seed, 0xC0DEB00CULL + static_cast<std::uint64_t>(r)));
    auto fit = run(detail::init_reps_from_latents(latents, m_count, rng));
    if (!have_best || fit.trace.back() < best.trace.back()) {
      best = std::move(fit);
      have_best = true;
    }
  }
  return best;
}

/// Standard Lloyd iterations on the latents: nearest-representative cells,
/// centroid updates, empty-cell reseeding. Stops at a fixed point of the
/// assignment, so returned representatives are exact centroids of their cells.
/// The trace records mean squared latent distortion.
inline CodebookFit fit_lbg(const Dataset& data, const Precoder& p, int bits,
                           const TrainConfig& cfg = {}) {
  if (bits < 1 || bits > 20)
    throw std::invalid_argument("fit_lbg: bits must lie in [1, 20], got " + std::to_string(bits));
  const int m_count = 1 << bits;
  const Mat latents = encode_all(p, data);
  const int t = data.size();

  auto run = [&](Mat reps0) {
    Codebook cb;
    cb.mode = QuantizerMode::lbg;
    cb.bits = bits;
    cb.reps = std::move(reps0);
    CodebookFit fit;
    auto assign = detail::assign_nearest(cb.reps, latents);
    double mse = 0.0;
    for (const double e : assign.error) mse += e;
    mse /= t;
    fit.trace.push_back(mse);
    for (int round = 0; round < cfg.codebook_rounds && mse > 0.0; ++round) {
      if (detail::reseed_empty_cells(cb, assign, latents)) {
        assign = detail::assign_nearest(cb.reps, latents);
      }
      // Centroid update.
      Mat sums = Mat::Zero(m_count, cb.latent_dim());
      std::vector<int> counts(static_cast<std::size_t>(m_count), 0);
      for (int i = 0; i < t; ++i) {
        sums.row(assign.cell[static_cast<std::size_t>(i)]) += latents.row(i);
        ++counts[static_cast<std::size_t>(assign.cell[static_cast<std::size_t>(i)])];
      }
      for (int m = 0; m < m_count; ++m)
        if (counts[static_cast<std::size_t>(m)] > 0)
          cb.reps.row(m) = sums.row(m) / counts[static_cast<std::size_t>(m)];
      const auto next = detail::assign_nearest(cb.reps, latents);
      double new_mse = 0.0;
      for (const double e : next.error) new_mse += e;
      new_mse /= t;
      const bool stable = next.cell == assign.cell;
      assign = next;
      mse = new_mse;
      fit.trace.push_back(mse);
      if (stable) break;
    }
    detail::refresh_caches(cb, p, nullptr);
    fit.codebook = std::move(cb);
    return fit;
  };

  CodebookFit best;
  bool have_best = false;
  const int restarts = std::max(1, cfg.codebook_restarts);
  for (int r = 0; r < restarts; ++r) {
    detail::Rng rng(detail::derive_seed(cfg.seed, 0x1B6C0DEULL + static_cast<std::uint64_t>(r)));
    auto fit = run(detail::init_reps_from_latents(latents, m_count, rng));
    if (!have_best || fit.trace.back() < best.trace.back()) {
      best = std::move(fit);
      have_best = true;
    }
  }
  return best;
}

/// Midrise uniform scalar quantizer on the latent box of the training data.
/// The total budget is split floor(bits/K) per dimension with the remainder
/// on leading dimensions; the codebook is the materialized product grid.
inline Codebook uniform_scalar_quantizer(const Dataset& data, const Precoder& p, int bits) {
  if (bits < 1 || bits > 20)
    throw std::invalid_argument("uniform_scalar_quantizer: bits must lie in [1, 20], got " +
                                std::to_string(bits));
  const int k = p.latent_dim();
  const Mat latents = encode_all(p, data);
  Codebook cb;
  cb.mode = QuantizerMode::uniform_scalar;
  cb.bits = bits;
  cb.grid.lo = latents.colwise().minCoeff().transpose();
  cb.grid.hi = latents.colwise().maxCoeff().transpose();
  cb.grid.bits.resize(static_cast<std::size_t>(k));
  for (int d = 0; d < k; ++d)
    cb.grid.bits[static_cast<std::size_t>(d)] = bits / k + (d < bits % k ? 1 : 0);

  const int m_count = 1 << bits;
  cb.reps.resize(m_count, k);
  for (int m = 0; m < m_count; ++m) {
    int rest = m;
    for (int d = k - 1; d >= 0; --d) {
      const int b = cb.grid.bits[static_cast<std::size_t>(d)];
      const int levels = 1 << b;
      const int idx = rest % levels;
      rest /= levels;
      const double lo = cb.grid.lo(d), hi = cb.grid.hi(d);
      cb.reps(m, d) = b == 0 ? 0.5 * (lo + hi) : lo + (idx + 0.5) * (hi - lo) / levels;
    }
  }
  detail::refresh_caches(cb, p, nullptr);
  return cb;
}

/// Encodes one profile: the cell index and its representative. GOQ uses the
/// goal-aware rule on the full profile (latent_only forces the distance rule);
/// LBG picks the nearest representative; the uniform grid maps each
/// coordinate independently.
inline std::pair<int, Vec> quantize(const Codebook& cb, const Vec& load, const Precoder& p,
                                    const TaskSpec& spec, bool latent_only = false) {
  if (cb.count() < 1) throw std::invalid_argument("quantize: empty codebook");
  if (cb.mode == QuantizerMode::uniform_scalar) {
    const Vec theta = encode(p, load);
    const int k = cb.latent_dim();
    int m = 0;
    for (int d = 0; d < k; ++d) {
      const int b = cb.grid.bits[static_cast<std::size_t>(d)];
      const int levels = 1 << b;
      int idx = 0;
      if (b > 0) {
        const double lo = cb.grid.lo(d), hi = cb.grid.hi(d);
        const double delta = (hi - lo) / levels;
        idx = delta > 0.0 ? static_cast<int>(std::floor((theta(d) - lo) / delta)) : 0;
        idx = std::clamp(idx, 0, levels - 1);
      }
      m = m * levels + idx;
    }
    return {m, cb.reps.row(m).transpose()};
  }
  if (cb.mode == QuantizerMode::goal_oriented && !latent_only) {
    const Decision d = solve_waterfill(load, spec);
    const double up = utility(d.allocation, load, spec);
    const Mat alloc =
        cb.allocations.size() ? cb.allocations : detail::computed_allocations(cb, spec);
    int best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int m = 0; m < cb.count(); ++m) {
      const double err = detail::squared(up - detail::rep_utility(alloc, m, load, spec));
      if (err < best_err) {
        best_err = err;
        best = m;
      }
    }
    return {best, cb.reps.row(best).transpose()};
  }
  const Vec theta = encode(p, load);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int m = 0; m < cb.count(); ++m) {
    const double d = (theta.transpose() - cb.reps.row(m)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = m;
    }
  }
  return {best, cb.reps.row(best).transpose()};
}

/// Doubles a codebook for the next bit budget: every representative is kept
/// and a slightly perturbed copy added, so the refined start can only improve
/// on the smaller budget's achievable loss.
inline Mat split_reps(const Mat& reps, std::uint64_t seed) {
  const double scale = 1.0 + (reps.size() ? reps.cwiseAbs().maxCoeff() : 0.0);
  Mat out(2 * reps.rows(), reps.cols());
  detail::Rng rng(detail::derive_seed(seed, 0x59117ULL));
  out.topRows(reps.rows()) = reps;
  for (Eigen::Index r = 0; r < reps.rows(); ++r) {
    Vec jittered = reps.row(r).transpose();
    for (Eigen::Index c = 0; c < reps.cols(); ++c)
      jittered(c) += 1e-4 * scale * (rng.uniform() - 0.5);
    while (detail::row_present(out, static_cast<int>(reps.rows() + r), jittered))
      jittered(0) += 1e-4 * scale;
    out.row(reps.rows() + r) = jittered.transpose();
  }
  return out;
}

}  // namespace goalcomp
