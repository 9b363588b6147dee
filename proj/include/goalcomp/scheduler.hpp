#pragma once

#include <goalcomp/types.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace goalcomp {

/// Optimal allocation for one task instance.
struct Decision {
  Vec allocation;      // x*, componentwise >= 0, sums to the energy budget
  double water_level;  // common level mu reached on the active slots
  int active_count;    // n*, number of slots filled up to mu
};

/// Affine model x* = H l + b of the decision, exact while the active set is unchanged.
struct LinearizedDecision {
  Mat H;
  Vec b;
};

/// L_p norm with the usual |.| convention; p = inf gives max |v_j|.
inline double lp_norm(const Vec& v, NormOrder p) {
  if (v.size() == 0) return 0.0;
  if (p.is_inf()) return v.cwiseAbs().maxCoeff();
  const int q = p.exponent();
  if (q == 1) return v.cwiseAbs().sum();
  if (q == 2) return v.norm();
  const double m = v.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v(i)) / m, q);
  return m * std::pow(s, 1.0 / q);
}

/// Task utility u(x; l) = -||x + l||_p. For p = inf this is the negated peak
/// consumption -max_j (x_j + l_j); the totals are nonnegative in every
/// scheduling context, so no absolute value is applied there.
inline double utility(const Vec& x, const Vec& load, const TaskSpec& spec) {
  if (x.size() != load.size())
    throw std::invalid_argument("utility: allocation and load dimensions differ");
  if (x.size() == 0) throw std::invalid_argument("utility: empty profile");
  const Vec total = x + load;
  if (spec.p.is_inf()) return -total.maxCoeff();
  return -lp_norm(total, spec.p);
}

namespace detail {

// Shared core of solve_waterfill / linearize: ascending sort of the loads and
// the largest n with (n-1) l_(n) - sum_{j<n} l_(j) <= E.
struct WaterfillSort {
  std::vector<int> perm;  // perm[i] = original index of the i-th smallest load
  std::vector<double> sorted;
  int n_star = 0;
  double mu = 0.0;
};

inline WaterfillSort waterfill_sorted(const Vec& load, double energy) {
  const int n = static_cast<int>(load.size());
  if (n == 0) throw std::invalid_argument("solve_waterfill: empty load profile");
  WaterfillSort ws;
  ws.perm.resize(static_cast<std::size_t>(n));
  std::iota(ws.perm.begin(), ws.perm.end(), 0);
  std::sort(ws.perm.begin(), ws.perm.end(), [&](int a, int b) {
    if (load(a) != load(b)) return load(a) < load(b);
    return a < b;
  });
  ws.sorted.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ws.sorted[static_cast<std::size_t>(i)] = load(ws.perm[static_cast<std::size_t>(i)]);

  double prefix = 0.0;  // sum of the first (k-1) sorted loads when testing k
  for (int k = 1; k <= n; ++k) {
    const double lk = ws.sorted[static_cast<std::size_t>(k - 1)];
    const double slack = (k - 1) * lk - prefix;
    if (slack <= energy) {
      ws.n_star = k;
      prefix += lk;
    } else {
      break;
    }
  }
  ws.mu = (energy + prefix) / ws.n_star;
  return ws;
}

}  // namespace detail

/// Water-filling solution of max -||x + l||_p subject to x >= 0, sum x = E.
/// The optimizer is independent of p.
inline Decision solve_waterfill(const Vec& load, const TaskSpec& spec) {
  const auto ws = detail::waterfill_sorted(load, spec.energy);
  const int n = static_cast<int>(load.size());
  Decision d;
  d.allocation = Vec::Zero(n);
  d.water_level = ws.mu;
  d.active_count = ws.n_star;
  for (int i = 0; i < ws.n_star; ++i) {
    const double xi = ws.mu - ws.sorted[static_cast<std::size_t>(i)];
    d.allocation(ws.perm[static_cast<std::size_t>(i)]) = xi > 0.0 ? xi : 0.0;
  }
  return d;
}

/// Exact affine map of the decision around l: x*(l) = H l + b, with the active
/// block of H equal to -I + (1/n*) 1 1^T and b = (E/n*) 1 on active slots.
inline LinearizedDecision linearize(const Vec& load, const TaskSpec& spec) {
  const auto ws = detail::waterfill_sorted(load, spec.energy);
  const int n = static_cast<int>(load.size());
  LinearizedDecision ld;
  ld.H = Mat::Zero(n, n);
  ld.b = Vec::Zero(n);
  const double inv = 1.0 / ws.n_star;
  for (int i = 0; i < ws.n_star; ++i) {
    const int oi = ws.perm[static_cast<std::size_t>(i)];
    ld.b(oi) = spec.energy * inv;
    for (int j = 0; j < ws.n_star; ++j) {
      const int oj = ws.perm[static_cast<std::size_t>(j)];
      ld.H(oi, oj) = (i == j) ? inv - 1.0 : inv;
    }
  }
  return ld;
}

}  // namespace goalcomp
