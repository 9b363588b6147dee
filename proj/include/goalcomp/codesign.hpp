#pragma once

#include <goalcomp/quantizer.hpp>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace goalcomp {

/// Gaussian model of the latent quantization noise eta = q(B l) - B l.
struct NoiseModel {
  Vec mean;  // K
  Mat cov;   // K x K, symmetric PSD
  bool is_zero() const { return mean.isZero(0.0) && cov.isZero(0.0); }
};

/// Sample statistics of the latent quantization error under the codebook's
/// own assignment rule, with 1/T normalization. The covariance is symmetrized
/// and negative eigenvalues are clipped to zero.
inline NoiseModel estimate_noise(const Codebook& cb, const Precoder& p, const Dataset& data,
                                 const TaskSpec& spec) {
  if (data.size() == 0) throw std::invalid_argument("estimate_noise: empty dataset");
  const Mat latents = encode_all(p, data);
  const auto cells = assign_cells(cb, data, p, spec);
  const int t = data.size();
  Mat eta(t, p.latent_dim());
  for (int i = 0; i < t; ++i)
    eta.row(i) = cb.reps.row(cells[static_cast<std::size_t>(i)]) - latents.row(i);
  NoiseModel nm;
  nm.mean = eta.colwise().mean().transpose();
  const Mat centered = eta.rowwise() - nm.mean.transpose();
  Mat c = (centered.transpose() * centered) / t;
  c = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  if (es.eigenvalues().minCoeff() < 0.0) {
    const Vec clipped = es.eigenvalues().cwiseMax(0.0);
    c = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    c = 0.5 * (c + c.transpose());
  }
  nm.cov = c;
  return nm;
}

namespace detail {

// Draws from N(mean, cov + jitter I) through a symmetric eigenfactorization.
// An exactly zero model short-circuits so downstream stays bit-deterministic.
struct NoiseSampler {
  Vec mean;
  Mat factor;
  bool zero;

  explicit NoiseSampler(const NoiseModel& nm) : mean(nm.mean), zero(nm.is_zero()) {
    const Eigen::Index k = nm.mean.size();
    if (zero) {
      factor = Mat::Zero(k, k);
      return;
    }
    const double jitter = 1e-10 * nm.cov.trace() / static_cast<double>(k);
    const Mat a = nm.cov + jitter * Mat::Identity(k, k);
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  Vec draw(Rng& rng) const {
    if (zero) return mean;
    Vec z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return mean + factor * z;
  }
};

}  // namespace detail

/// kappa noisy reconstructions B^T B l + B^T eta, eta ~ N(mean, cov), one per
/// row. With a zero noise model every row equals the clean reconstruction.
inline Mat sample_noisy_reconstructions(const Precoder& p, const NoiseModel& noise,
                                        const Vec& load, int kappa, std::uint64_t seed) {
  if (kappa < 1) throw std::invalid_argument("sample_noisy_reconstructions: kappa must be >= 1");
  if (load.size() != p.dim())
    throw std::invalid_argument("sample_noisy_reconstructions: profile dimension mismatch");
  if (noise.mean.size() != p.latent_dim())
    throw std::invalid_argument("sample_noisy_reconstructions: noise dimension mismatch");
  const detail::NoiseSampler sampler(noise);
  detail::Rng rng(seed);
  const Vec base = p.basis.transpose() * (p.basis * load);
  Mat out(kappa, p.dim());
  for (int k = 0; k < kappa; ++k)
    out.row(k) = (base + p.basis.transpose() * sampler.draw(rng)).transpose();
  return out;
}

namespace detail {

// Frozen latent noise draws, row (i * kappa + k) for sample i's k-th draw.
inline Mat draw_noise_table(const NoiseModel& noise, int t, int kappa, std::uint64_t seed) {
  const NoiseSampler sampler(noise);
  Mat eta(static_cast<Eigen::Index>(t) * kappa, noise.mean.size());
  for_chunks(t, kChunk, [&](std::int64_t, std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      for (int k = 0; k < kappa; ++k)
        eta.row(i * kappa + k) = sampler.draw(rng).transpose();
    }
  });
  return eta;
}

// Mean over (i, k) of the squared utility gap with the reconstruction
// B^T B l_i + B^T eta_{i,k}; the perfect utilities stay those of the true l.
inline double noisy_loss_given(const Mat& basis, const Mat& profiles, const Mat& eta,
                               const Vec& u_perfect, const TaskSpec& spec, int kappa) {
  const int t = static_cast<int>(profiles.rows());
  const Mat recon = (profiles * basis.transpose()) * basis;
  const Mat noise_recon = eta * basis;
  const std::int64_t n_chunks = (t + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(n_chunks), 0.0);
  for_chunks(t, kChunk, [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
    double s = 0.0;
    for (std::int64_t i = begin; i < end; ++i) {
      const Vec l = profiles.row(static_cast<Eigen::Index>(i)).transpose();
      for (int k = 0; k < kappa; ++k) {
        const Vec lhat =
            (recon.row(static_cast<Eigen::Index>(i)) + noise_recon.row(i * kappa + k)).transpose();
        const double u_hat = utility(solve_waterfill(lhat, spec).allocation, l, spec);
        const double gap = u_perfect(static_cast<Eigen::Index>(i)) - u_hat;
        s += gap * gap;
      }
    }
    partial[static_cast<std::size_t>(c)] = s;
  });
  double sum = 0.0;
  for (const double s : partial) sum += s;
  return sum / (static_cast<double>(t) * kappa);
}

inline Mat noisy_gradient_given(const Mat& basis, const Mat& profiles, const Mat& eta,
                                const Vec& u_perfect, const TaskSpec& spec, int kappa) {
  const int t = static_cast<int>(profiles.rows());
  const int k_dim = static_cast<int>(basis.rows());
  const int n = static_cast<int>(basis.cols());
  const Mat recon = (profiles * basis.transpose()) * basis;
  const Mat noise_recon = eta * basis;
  const std::int64_t n_chunks = (t + kChunk - 1) / kChunk;
  std::vector<Mat> partial(static_cast<std::size_t>(n_chunks), Mat::Zero(k_dim, n));
  for_chunks(t, kChunk, [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
    Mat g = Mat::Zero(k_dim, n);
    for (std::int64_t i = begin; i < end; ++i) {
      const Vec l = profiles.row(static_cast<Eigen::Index>(i)).transpose();
      for (int k = 0; k < kappa; ++k) {
        const Vec lhat =
            (recon.row(static_cast<Eigen::Index>(i)) + noise_recon.row(i * kappa + k)).transpose();
        add_gradient_term(g, basis, l, lhat, u_perfect(static_cast<Eigen::Index>(i)), spec);
      }
    }
    partial[static_cast<std::size_t>(c)] = std::move(g);
  });
  Mat g = Mat::Zero(k_dim, n);
  for (const Mat& m : partial) g += m;
  return g / (static_cast<double>(t) * kappa);
}

// Precoder descent against the noise-averaged objective: same KLT start, same
// backtracking rules, with every sample's contribution averaged over its
// kappa frozen noisy reconstructions.
inline PrecoderFit fit_precoder_noisy(const Dataset& data, const TaskSpec& spec, int k_dim,
                                      const TrainConfig& cfg, const Mat& eta, int kappa) {
  PrecoderFit fit;
  fit.precoder = klt_basis(data, k_dim, cfg.centered_klt);
  const Vec u_perfect = perfect_utilities(data, spec);
  double loss = noisy_loss_given(fit.precoder.basis, data.profiles, eta, u_perfect, spec, kappa);
  fit.trace.loss.push_back(loss);
  for (int it = 0; it < cfg.max_iterations && loss > 0.0; ++it) {
    const Mat g =
        noisy_gradient_given(fit.precoder.basis, data.profiles, eta, u_perfect, spec, kappa);
    const double g_norm = g.norm();
    if (g_norm == 0.0) break;
    double step = 1.0 / (g_norm + cfg.step_eps);
    bool accepted = false;
    Mat cand;
    double cand_loss = 0.0;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      cand = fit.precoder.basis - step * g;
      cand_loss = noisy_loss_given(cand, data.profiles, eta, u_perfect, spec, kappa);
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

}  // namespace detail

struct CodesignSnapshot {
  Precoder precoder;
  Codebook codebook;
  double loss = 0.0;
};

struct CodesignState {
  Precoder precoder;   // final iteration
  Codebook codebook;   // final iteration
  NoiseModel noise;    // estimated on the final pair
  std::vector<double> loss_trace;  // total goal loss after each outer iteration
  CodesignSnapshot best;           // minimum-loss iterate; ties keep the earliest
};

/// Alternating co-design. Iteration 0 is the plain single-pass design (precoder
/// descent then codebook fit); each further iteration re-estimates the latent
/// noise, retrains
/// the precoder against noise-averaged reconstructions, and retrains the
/// codebook under a fresh derived seed. The returned best iterate can never
/// underperform the single-pass design on training data. An exactly zero noise
/// model routes through the clean trainer, making the zero-noise fixed point
/// bit-exact. Stops once an iteration improves the loss by less than rel_tol.
inline CodesignState fit_iterative(const Dataset& data, const TaskSpec& spec, int k_dim, int bits,
                                   const TrainConfig& cfg = {}) {
  CodesignState st;
  const auto pfit = fit_linear_precoder(data, spec, k_dim, cfg);
  auto qfit = fit_goq(data, pfit.precoder, spec, bits, cfg);
  st.precoder = pfit.precoder;
  st.codebook = std::move(qfit.codebook);
  st.noise = estimate_noise(st.codebook, st.precoder, data, spec);
  double loss = goal_loss(st.codebook, data, st.precoder, spec);
  st.loss_trace.push_back(loss);
  st.best = {st.precoder, st.codebook, loss};

  const int kappa = std::max(1, cfg.noisy_draws);
  for (int j = 1; j <= cfg.outer_rounds && loss > 0.0; ++j) {
    PrecoderFit pj;
    if (st.noise.is_zero()) {
      pj = fit_linear_precoder(data, spec, k_dim, cfg);
    } else {
      const Mat eta = detail::draw_noise_table(
          st.noise, data.size(), kappa,
          detail::derive_seed(cfg.seed, 0xE7A0000ULL + static_cast<std::uint64_t>(j)));
      pj = detail::fit_precoder_noisy(data, spec, k_dim, cfg, eta, kappa);
    }
    TrainConfig qcfg = cfg;
    qcfg.seed = detail::derive_seed(cfg.seed, 0x90900000ULL + static_cast<std::uint64_t>(j));
    auto qj = fit_goq(data, pj.precoder, spec, bits, qcfg);
    st.precoder = pj.precoder;
    st.codebook = std::move(qj.codebook);
    st.noise = estimate_noise(st.codebook, st.precoder, data, spec);
    const double prev = loss;
    loss = goal_loss(st.codebook, data, st.precoder, spec);
    st.loss_trace.push_back(loss);
    if (loss < st.best.loss) st.best = {st.precoder, st.codebook, loss};
    if ((prev - loss) / prev <= cfg.rel_tol) break;
  }
  return st;
}

}  // namespace goalcomp
