#pragma once

#include <goalcomp/dataset.hpp>
#include <goalcomp/detail/parallel.hpp>
#include <goalcomp/scheduler.hpp>
#include <goalcomp/types.hpp>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace goalcomp {

/// Linear precoder: theta = B l with B of shape K x N; the decoder is B^T.
struct Precoder {
  Mat basis;

  int latent_dim() const { return static_cast<int>(basis.rows()); }
  int dim() const { return static_cast<int>(basis.cols()); }
};

inline Vec encode(const Precoder& p, const Vec& load) {
  if (load.size() != p.basis.cols())
    throw std::invalid_argument("encode: load dimension mismatch");
  return p.basis * load;
}

inline Vec decode(const Precoder& p, const Vec& latent) {
  if (latent.size() != p.basis.rows())
    throw std::invalid_argument("decode: latent dimension mismatch");
  return p.basis.transpose() * latent;
}

/// Latents for a whole dataset, one row per sample.
inline Mat encode_all(const Precoder& p, const Dataset& data) {
  if (data.dim() != p.dim()) throw std::invalid_argument("encode_all: dimension mismatch");
  return data.profiles * p.basis.transpose();
}

/// u(x*(l); l) for every sample.
inline Vec perfect_utilities(const Dataset& data, const TaskSpec& spec) {
  const int t = data.size();
  Vec u(t);
  detail::for_chunks(t, detail::kChunk, [&](std::int64_t, std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      const Vec l = data.sample(static_cast<int>(i));
      u(static_cast<Eigen::Index>(i)) = utility(solve_waterfill(l, spec).allocation, l, spec);
    }
  });
  return u;
}

/// K leading eigenvectors (descending eigenvalue) of the second-moment matrix
/// (1/T) sum l l^T as rows, each sign-fixed so its first nonzero entry is
/// positive. With centered = true the mean is removed before the eigenproblem;
/// the decoder stays l_hat = B^T theta either way.
inline Precoder klt_basis(const Dataset& data, int K, bool centered = false) {
  const int n = data.dim();
  if (data.size() < 1) throw std::invalid_argument("klt_basis: empty dataset");
  if (K < 1 || K > n)
    throw std::invalid_argument("klt_basis: K must lie in [1, " + std::to_string(n) + "], got " +
                                std::to_string(K));
  Mat x = data.profiles;
  if (centered) x.rowwise() -= x.colwise().mean();
  const Mat m2 = (x.transpose() * x) / static_cast<double>(data.size());
  Eigen::SelfAdjointEigenSolver<Mat> es(m2);
  if (es.info() != Eigen::Success) throw std::runtime_error("klt_basis: eigendecomposition failed");
  Precoder p;
  p.basis.resize(K, n);
  for (int k = 0; k < K; ++k) {
    Vec v = es.eigenvectors().col(n - 1 - k);
    for (int i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    p.basis.row(k) = v.transpose();
  }
  return p;
}

namespace detail {

inline double loss_given(const Mat& basis, const Mat& profiles, const Vec& u_perfect,
                         const TaskSpec& spec) {
  const int t = static_cast<int>(profiles.rows());
  const Mat recon = (profiles * basis.transpose()) * basis;
  const std::int64_t n_chunks = (t + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(n_chunks), 0.0);
  for_chunks(t, kChunk, [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
    double s = 0.0;
    for (std::int64_t i = begin; i < end; ++i) {
      const Vec l = profiles.row(static_cast<Eigen::Index>(i)).transpose();
      const Vec lhat = recon.row(static_cast<Eigen::Index>(i)).transpose();
      const double u_hat = utility(solve_waterfill(lhat, spec).allocation, l, spec);
      const double gap = u_perfect(static_cast<Eigen::Index>(i)) - u_hat;
      s += gap * gap;
    }
    partial[static_cast<std::size_t>(c)] = s;
  });
  double sum = 0.0;
  for (const double s : partial) sum += s;
  return sum / t;
}

// One sample's contribution to the loss gradient, with the decision map frozen
// at lhat: the affine model x = H lhat + b is differentiated only through
// lhat(B), giving C * (B l w^T + B w l^T) with w = H' beta (H is symmetric).
inline void add_gradient_term(Mat& g, const Mat& basis, const Vec& l, const Vec& lhat,
                              double u_perfect, const TaskSpec& spec) {
  const Decision d = solve_waterfill(lhat, spec);
  const LinearizedDecision ld = linearize(lhat, spec);
  const Vec v = d.allocation + l;
  double c;
  Vec w;
  if (spec.p.is_inf()) {
    Eigen::Index peak;
    const double top = v.maxCoeff(&peak);
    c = 2.0 * (u_perfect + top);  // u_perfect - u_hat, u_hat = -top
    w = ld.H.col(peak);
  } else {
    const int p = spec.p.exponent();
    const double norm = lp_norm(v, spec.p);
    c = 2.0 * (u_perfect + norm) * std::pow(norm, 1 - p);
    Vec beta(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) beta(i) = std::pow(v(i), p - 1);
    w = ld.H * beta;
  }
  const Vec bl = basis * l;
  const Vec bw = basis * w;
  g.noalias() += c * (bl * w.transpose() + bw * l.transpose());
}

inline Mat gradient_given(const Mat& basis, const Mat& profiles, const Vec& u_perfect,
                          const TaskSpec& spec) {
  const int t = static_cast<int>(profiles.rows());
  const int k = static_cast<int>(basis.rows());
  const int n = static_cast<int>(basis.cols());
  const Mat recon = (profiles * basis.transpose()) * basis;
  const std::int64_t n_chunks = (t + kChunk - 1) / kChunk;
  std::vector<Mat> partial(static_cast<std::size_t>(n_chunks), Mat::Zero(k, n));
  for_chunks(t, kChunk, [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
    Mat g = Mat::Zero(k, n);
    for (std::int64_t i = begin; i < end; ++i) {
      add_gradient_term(g, basis, profiles.row(static_cast<Eigen::Index>(i)).transpose(),
                        recon.row(static_cast<Eigen::Index>(i)).transpose(),
                        u_perfect(static_cast<Eigen::Index>(i)), spec);
    }
    partial[static_cast<std::size_t>(c)] = std::move(g);
  });
  Mat g = Mat::Zero(k, n);
  for (const Mat& m : partial) g += m;
  return g / t;
}

}  // namespace detail

/// Mean squared optimality gap (1/T) sum |u(x*(l); l) - u(x*(B^T B l); l)|^2.
inline double empirical_loss(const Precoder& p, const Dataset& data, const TaskSpec& spec) {
  if (data.dim() != p.dim()) throw std::invalid_argument("empirical_loss: dimension mismatch");
  return detail::loss_given(p.basis, data.profiles, perfect_utilities(data, spec), spec);
}

/// Gradient of the empirical loss with the per-sample decision maps frozen;
/// B - lambda * G decreases the loss for small lambda. p = 1 is rejected: the
/// objective is locally constant in the loads wherever the budget binds.
inline Mat gradient(const Precoder& p, const Dataset& data, const TaskSpec& spec) {
  if (data.dim() != p.dim()) throw std::invalid_argument("gradient: dimension mismatch");
  if (!spec.p.is_inf() && spec.p.exponent() == 1)
    throw std::invalid_argument("gradient: p = 1 gives a degenerate gradient");
  return detail::gradient_given(p.basis, data.profiles, perfect_utilities(data, spec), spec);
}

struct FitTrace {
  std::vector<double> loss;  // accepted losses; loss[0] is the initial value
  bool line_search_exhausted = false;
};

struct PrecoderFit {
  Precoder precoder;
  FitTrace trace;
};

/// Gradient descent from the KLT basis with backtracking line search; every
/// accepted step strictly decreases the empirical loss, so the trace is
/// non-increasing and the final loss never exceeds the KLT loss.
inline PrecoderFit fit_linear_precoder(const Dataset& data, const TaskSpec& spec, int K,
                                       const TrainConfig& cfg = {}) {
  if (!spec.p.is_inf() && spec.p.exponent() == 1)
    throw std::invalid_argument("fit_linear_precoder: p = 1 gives a degenerate gradient");
  PrecoderFit fit;
  fit.precoder = klt_basis(data, K, cfg.centered_klt);
  const Vec u_perfect = perfect_utilities(data, spec);
  double loss = detail::loss_given(fit.precoder.basis, data.profiles, u_perfect, spec);
  fit.trace.loss.push_back(loss);
  for (int it = 0; it < cfg.max_iterations && loss > 0.0; ++it) {
    const Mat g = detail::gradient_given(fit.precoder.basis, data.profiles, u_perfect, spec);
    const double g_norm = g.norm();
    if (g_norm == 0.0) break;
    double step = 1.0 / (g_norm + cfg.step_eps);
    bool accepted = false;
    Mat cand;
    double cand_loss = 0.0;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      cand = fit.precoder.basis - step * g;
      cand_loss = detail::loss_given(cand, data.profiles, u_perfect, spec);
      if (cand_loss < loss) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack_factor;
    }
    if (!accepted) {
      fit.trace.line_search_exhausted = true;
      break;
    }
    const double prev = loss;
    fit.precoder.basis = std::move(cand);
    loss = cand_loss;
    fit.trace.loss.push_back(loss);
    if ((prev - loss) / prev < cfg.rel_tol) break;
  }
  return fit;
}

}  // namespace goalcomp
