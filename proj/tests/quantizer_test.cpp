#include <goalcomp/quantizer.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"

namespace goalcomp {
namespace {

const TaskSpec kInfSpec(NormOrder::inf(), 5.0);

// Brute-force goal error of one sample against one representative, computed
// straight from the definitions without any codebook cache.
double oracle_goal_error(const Vec& rep, const Vec& load, const Precoder& p,
                         const TaskSpec& spec) {
  const Decision perfect = solve_waterfill(load, spec);
  const double up = utility(perfect.allocation, load, spec);
  const Vec decoded = p.basis.transpose() * rep;
  const Decision approx = solve_waterfill(decoded, spec);
  const double ua = utility(approx.allocation, load, spec);
  return (up - ua) * (up - ua);
}

Dataset small_dataset(int t, int n, std::uint64_t seed) {
  SyntheticParams params;
  return gen_synthetic(t, n, seed, params);
}

Precoder random_precoder(int k, int n, std::uint64_t seed) {
  test::Rng rng(seed);
  Mat b = test::random_mat(rng, k, n, -1.0, 1.0);
  Eigen::HouseholderQR<Mat> qr(b.transpose());
  Mat q = qr.householderQ() * Mat::Identity(n, k);
  return Precoder{q.transpose()};
}

Codebook random_codebook(QuantizerMode mode, int bits, const Precoder& p, const TaskSpec* spec,
                         std::uint64_t seed) {
  test::Rng rng(seed);
  Codebook cb;
  cb.mode = mode;
  cb.bits = bits;
  cb.reps = test::random_mat(rng, 1 << bits, p.latent_dim(), -1.0, 2.0);
  detail::refresh_caches(cb, p, spec);
  return cb;
}

TEST(Assign, GoalRuleMatchesBruteForce) {
  const auto data = small_dataset(40, 6, 11);
  const auto p = random_precoder(2, 6, 12);
  const auto cb = random_codebook(QuantizerMode::goal_oriented, 3, p, &kInfSpec, 13);
  const auto cells = assign_cells(cb, data, p, kInfSpec);
  ASSERT_EQ(cells.size(), 40u);
  for (int i = 0; i < data.size(); ++i) {
    int best = 0;
    double best_err = oracle_goal_error(cb.reps.row(0).transpose(), data.sample(i), p, kInfSpec);
    for (int m = 1; m < cb.count(); ++m) {
      const double err = oracle_goal_error(cb.reps.row(m).transpose(), data.sample(i), p, kInfSpec);
      if (err < best_err) {
        best_err = err;
        best = m;
      }
    }
    EXPECT_EQ(cells[static_cast<std::size_t>(i)], best) << "sample " << i;
  }
}

TEST(Assign, GoalRuleFiniteP) {
  const TaskSpec spec(NormOrder::finite(3), 4.0);
  const auto data = small_dataset(25, 5, 21);
  const auto p = random_precoder(2, 5, 22);
  const auto cb = random_codebook(QuantizerMode::goal_oriented, 2, p, &spec, 23);
  const auto cells = assign_cells(cb, data, p, spec);
  for (int i = 0; i < data.size(); ++i) {
    int best = 0;
    double best_err = oracle_goal_error(cb.reps.row(0).transpose(), data.sample(i), p, spec);
    for (int m = 1; m < cb.count(); ++m) {
      const double err = oracle_goal_error(cb.reps.row(m).transpose(), data.sample(i), p, spec);
      if (err < best_err) {
        best_err = err;
        best = m;
      }
    }
    EXPECT_EQ(cells[static_cast<std::size_t>(i)], best) << "sample " << i;
  }
}

TEST(Assign, DistanceRuleMatchesBruteForce) {
  const auto data = small_dataset(30, 6, 31);
  const auto p = random_precoder(3, 6, 32);
  const auto cb = random_codebook(QuantizerMode::lbg, 3, p, nullptr, 33);
  const auto cells = assign_cells(cb, data, p, kInfSpec);
  for (int i = 0; i < data.size(); ++i) {
    const Vec theta = encode(p, data.sample(i));
    int best = 0;
    double best_d = (theta.transpose() - cb.reps.row(0)).squaredNorm();
    for (int m = 1; m < cb.count(); ++m) {
      const double d = (theta.transpose() - cb.reps.row(m)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    EXPECT_EQ(cells[static_cast<std::size_t>(i)], best) << "sample " << i;
  }
}

TEST(Assign, LatentOnlyOverridesGoalRule) {
  const auto data = small_dataset(30, 6, 41);
  const auto p = random_precoder(2, 6, 42);
  const auto goq = random_codebook(QuantizerMode::goal_oriented, 3, p, &kInfSpec, 43);
  Codebook lbg = goq;
  lbg.mode = QuantizerMode::lbg;
  EXPECT_EQ(assign_cells(goq, data, p, kInfSpec, true), assign_cells(lbg, data, p, kInfSpec));
}

TEST(Assign, TiesPickSmallestIndex) {
  Dataset data;
  data.profiles = Mat::Ones(3, 4);
  const Precoder p{Mat::Identity(1, 4)};
  Codebook cb;
  cb.mode = QuantizerMode::goal_oriented;
  cb.bits = 2;
  cb.reps = Mat(4, 1);
  cb.reps << 2.0, 2.0, 2.0, 2.0;  // all representatives decode identically
  detail::refresh_caches(cb, p, &kInfSpec);
  const auto cells = assign_cells(cb, data, p, kInfSpec);
  for (const int c : cells) EXPECT_EQ(c, 0);
}

TEST(Assign, EmptyCodebookThrows) {
  const auto data = small_dataset(5, 4, 51);
  const Precoder p{Mat::Identity(2, 4)};
  Codebook cb;
  cb.mode = QuantizerMode::lbg;
  cb.reps = Mat(0, 2);
  EXPECT_THROW(assign_cells(cb, data, p, kInfSpec), std::invalid_argument);
}

double cell_cost_oracle(const Vec& rep, const std::vector<int>& cell, const Dataset& data,
                        const Precoder& p, const TaskSpec& spec) {
  double c = 0.0;
  for (const int i : cell) c += oracle_goal_error(rep, data.sample(i), p, spec);
  return c;
}

TEST(Update, NeverIncreasesAnyCellCost) {
  const auto data = small_dataset(36, 6, 61);
  const auto p = random_precoder(2, 6, 62);
  for (const std::uint64_t seed : {71ull, 72ull, 73ull}) {
    const auto cb = random_codebook(QuantizerMode::goal_oriented, 2, p, &kInfSpec, seed);
    const auto cells = assign_cells(cb, data, p, kInfSpec);
    const auto updated = update_representatives(cb, cells, data, p, kInfSpec);
    std::vector<std::vector<int>> members(4);
    for (int i = 0; i < data.size(); ++i)
      members[static_cast<std::size_t>(cells[static_cast<std::size_t>(i)])].push_back(i);
    for (int m = 0; m < 4; ++m) {
      const double before =
          cell_cost_oracle(cb.reps.row(m).transpose(), members[m], data, p, kInfSpec);
      const double after =
          cell_cost_oracle(updated.reps.row(m).transpose(), members[m], data, p, kInfSpec);
      EXPECT_LE(after, before + 1e-12) << "cell " << m;
    }
  }
}

TEST(Update, PicksBestCandidateExhaustively) {
  const auto data = small_dataset(20, 5, 81);
  const auto p = random_precoder(2, 5, 82);
  const auto cb = random_codebook(QuantizerMode::goal_oriented, 2, p, &kInfSpec, 83);
  const auto cells = assign_cells(cb, data, p, kInfSpec);
  const auto updated = update_representatives(cb, cells, data, p, kInfSpec);
  const Mat latents = encode_all(p, data);
  std::vector<std::vector<int>> members(4);
  for (int i = 0; i < data.size(); ++i)
    members[static_cast<std::size_t>(cells[static_cast<std::size_t>(i)])].push_back(i);
  for (int m = 0; m < 4; ++m) {
    if (members[m].empty()) {
      EXPECT_EQ(updated.reps.row(m), cb.reps.row(m));
      continue;
    }
    // Re-derive the winner from the candidate set with an independent scan.
    Vec centroid = Vec::Zero(2);
    for (const int i : members[m]) centroid += latents.row(i).transpose();
    centroid /= static_cast<double>(members[m].size());
    std::vector<Vec> cands;
    for (const int i : members[m]) cands.push_back(latents.row(i).transpose());
    cands.push_back(centroid);
    cands.push_back(cb.reps.row(m).transpose());
    Vec best = cands.front();
    double best_cost = cell_cost_oracle(best, members[m], data, p, kInfSpec);
    for (const auto& cand : cands) {
      const double c = cell_cost_oracle(cand, members[m], data, p, kInfSpec);
      if (c < best_cost) {
        best_cost = c;
        best = cand;
      }
    }
    EXPECT_EQ(updated.reps.row(m).transpose(), best) << "cell " << m;
  }
}

TEST(Update, SingletonCellReturnsItsLatent) {
  Dataset data;
  data.profiles = Mat(2, 3);
  data.profiles << 1.0, 2.0, 0.5,
                   0.2, 0.1, 1.5;
  const Precoder p{(Mat(1, 3) << 1.0, 0.0, 0.0).finished()};
  Codebook cb;
  cb.mode = QuantizerMode::goal_oriented;
  cb.bits = 1;
  cb.reps = Mat(2, 1);
  cb.reps << 1.0, 0.2;  // decode to the samples' own latents: every cost ties
  detail::refresh_caches(cb, p, &kInfSpec);
  const CellAssignment cells{0, 1};
  const auto updated = update_representatives(cb, cells, data, p, kInfSpec);
  const Mat latents = encode_all(p, data);
  EXPECT_EQ(updated.reps(0, 0), latents(0, 0));
  EXPECT_EQ(updated.reps(1, 0), latents(1, 0));
}

TEST(Update, LbgUsesExactCentroids) {
  const auto data = small_dataset(30, 5, 91);
  const auto p = random_precoder(2, 5, 92);
  const auto cb = random_codebook(QuantizerMode::lbg, 2, p, nullptr, 93);
  const auto cells = assign_cells(cb, data, p, kInfSpec);
  const auto updated = update_representatives(cb, cells, data, p, kInfSpec);
  const Mat latents = encode_all(p, data);
  std::vector<std::vector<int>> members(4);
  for (int i = 0; i < data.size(); ++i)
    members[static_cast<std::size_t>(cells[static_cast<std::size_t>(i)])].push_back(i);
  for (int m = 0; m < 4; ++m) {
    if (members[m].empty()) {
      EXPECT_EQ(updated.reps.row(m), cb.reps.row(m));
      continue;
    }
    Vec centroid = Vec::Zero(2);
    for (const int i : members[m]) centroid += latents.row(i).transpose();
    centroid /= static_cast<double>(members[m].size());
    EXPECT_LT((updated.reps.row(m).transpose() - centroid).norm(), 1e-12);
  }
}

TEST(Update, AllEmptyThrows) {
  const auto data = small_dataset(4, 4, 95);
  const Precoder p{Mat::Identity(2, 4)};
  const auto cb = random_codebook(QuantizerMode::goal_oriented, 1, p, &kInfSpec, 96);
  EXPECT_THROW(update_representatives(cb, CellAssignment{}, data, p, kInfSpec),
               std::invalid_argument);
}

TEST(GoalLoss, MatchesManualMinimum) {
  const auto data = small_dataset(25, 6, 101);
  const auto p = random_precoder(2, 6, 102);
  const auto cb = random_codebook(QuantizerMode::goal_oriented, 3, p, &kInfSpec, 103);
  double expected = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    double best = oracle_goal_error(cb.reps.row(0).transpose(), data.sample(i), p, kInfSpec);
    for (int m = 1; m < cb.count(); ++m)
      best = std::min(best,
                      oracle_goal_error(cb.reps.row(m).transpose(), data.sample(i), p, kInfSpec));
    expected += best;
  }
  EXPECT_NEAR(goal_loss(cb, data, p, kInfSpec), expected, 1e-9 * (1.0 + expected));
}

TEST(GoalLoss, LatentRuleUsesNearestRep) {
  const auto data = small_dataset(25, 6, 111);
  const auto p = random_precoder(2, 6, 112);
  const auto cb = random_codebook(QuantizerMode::lbg, 3, p, nullptr, 113);
  double expected = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const Vec theta = encode(p, data.sample(i));
    int best_m = 0;
    double best_d = (theta.transpose() - cb.reps.row(0)).squaredNorm();
    for (int m = 1; m < cb.count(); ++m) {
      const double d = (theta.transpose() - cb.reps.row(m)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best_m = m;
      }
    }
    expected += oracle_goal_error(cb.reps.row(best_m).transpose(), data.sample(i), p, kInfSpec);
  }
  EXPECT_NEAR(goal_loss(cb, data, p, kInfSpec), expected, 1e-9 * (1.0 + expected));
}

TEST(FitGoq, TraceNonIncreasing) {
  const auto data = small_dataset(60, 8, 121);
  const auto p = random_precoder(2, 8, 122);
  TrainConfig cfg;
  cfg.seed = 5;
  cfg.codebook_restarts = 2;
  const auto fit = fit_goq(data, p, kInfSpec, 3, cfg);
  ASSERT_GE(fit.trace.size(), 1u);
  for (std::size_t i = 1; i < fit.trace.size(); ++i)
    EXPECT_LE(fit.trace[i], fit.trace[i - 1] + 1e-12) << "round " << i;
  EXPECT_NEAR(fit.trace.back(), goal_loss(fit.codebook, data, p, kInfSpec),
              1e-9 * (1.0 + fit.trace.back()));
}

TEST(FitGoq, ExactRecoveryWhenBudgetCoversDistinctProfiles) {
  // 4 distinct profiles, 2 bits, K=N: reconstruction is lossless once every
  // latent is a representative, so the final loss must reach exactly 0.
  Dataset base = small_dataset(4, 6, 131);
  Dataset data;
  data.profiles = Mat(12, 6);
  for (int i = 0; i < 12; ++i) data.profiles.row(i) = base.profiles.row(i % 4);
  const Precoder p{Mat::Identity(6, 6)};
  TrainConfig cfg;
  cfg.seed = 3;
  const auto fit = fit_goq(data, p, kInfSpec, 2, cfg);
  EXPECT_EQ(fit.trace.back(), 0.0);
  EXPECT_EQ(goal_loss(fit.codebook, data, p, kInfSpec), 0.0);
}

TEST(FitGoq, MoreBudgetThanDistinctLatentsStillRecovers) {
  Dataset base = small_dataset(3, 5, 141);
  Dataset data;
  data.profiles = Mat(9, 5);
  for (int i = 0; i < 9; ++i) data.profiles.row(i) = base.profiles.row(i % 3);
  const Precoder p{Mat::Identity(5, 5)};
  TrainConfig cfg;
  cfg.seed = 9;
  const auto fit = fit_goq(data, p, kInfSpec, 3, cfg);  // 8 cells for 3 distinct latents
  EXPECT_EQ(fit.trace.back(), 0.0);
}

TEST(FitGoq, RepsPairwiseDistinct) {
  const auto data = small_dataset(50, 6, 151);
  const auto p = random_precoder(2, 6, 152);
  TrainConfig cfg;
  cfg.seed = 8;
  cfg.codebook_restarts = 1;
  const auto fit = fit_goq(data, p, kInfSpec, 3, cfg);
  for (int a = 0; a < fit.codebook.count(); ++a)
    for (int b = a + 1; b < fit.codebook.count(); ++b)
      EXPECT_NE(fit.codebook.reps.row(a), fit.codebook.reps.row(b)) << a << " vs " << b;
}

TEST(FitGoq, DeterministicAcrossRuns) {
  const auto data = small_dataset(40, 6, 161);
  const auto p = random_precoder(2, 6, 162);
  TrainConfig cfg;
  cfg.seed = 17;
  cfg.codebook_restarts = 2;
  const auto a = fit_goq(data, p, kInfSpec, 3, cfg);
  const auto b = fit_goq(data, p, kInfSpec, 3, cfg);
  EXPECT_EQ(a.codebook.reps, b.codebook.reps);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(FitGoq, StartRepsCannotHurt) {
  const auto data = small_dataset(50, 6, 171);
  const auto p = random_precoder(1, 6, 172);
  TrainConfig cfg;
  cfg.seed = 2;
  cfg.codebook_restarts = 2;
  const auto base = fit_goq(data, p, kInfSpec, 2, cfg);
  const Mat doubled = split_reps(base.codebook.reps, cfg.seed);
  const auto refined = fit_goq(data, p, kInfSpec, 3, cfg, &doubled);
  EXPECT_LE(refined.trace.back(), base.trace.back() + 1e-12);
}

TEST(FitGoq, LocalRefineDoesNotRegress) {
  const auto data = small_dataset(40, 6, 181);
  const auto p = random_precoder(2, 6, 182);
  TrainConfig cfg;
  cfg.seed = 4;
  cfg.codebook_restarts = 1;
  const auto plain = fit_goq(data, p, kInfSpec, 2, cfg);
  cfg.local_refine = true;
  const auto refined = fit_goq(data, p, kInfSpec, 2, cfg);
  EXPECT_LE(refined.trace.back(), plain.trace.back() + 1e-12);
  for (std::size_t i = 1; i < refined.trace.size(); ++i)
    EXPECT_LE(refined.trace[i], refined.trace[i - 1] + 1e-12);
}

TEST(FitGoq, BadBitsThrow) {
  const auto data = small_dataset(10, 4, 191);
  const Precoder p{Mat::Identity(2, 4)};
  EXPECT_THROW(fit_goq(data, p, kInfSpec, 0), std::invalid_argument);
  EXPECT_THROW(fit_goq(data, p, kInfSpec, 21), std::invalid_argument);
}

TEST(FitLbg, TwoPointClustersRecovered) {
  // Latents {0, 0, 10, 10} along the first axis; one bit must place the
  // representatives at 0 and 10 exactly.
  Dataset data;
  data.profiles = Mat::Zero(4, 3);
  data.profiles(2, 0) = 10.0;
  data.profiles(3, 0) = 10.0;
  const Precoder p{(Mat(1, 3) << 1.0, 0.0, 0.0).finished()};
  TrainConfig cfg;
  cfg.seed = 1;
  const auto fit = fit_lbg(data, p, 1, cfg);
  std::vector<double> reps{fit.codebook.reps(0, 0), fit.codebook.reps(1, 0)};
  std::sort(reps.begin(), reps.end());
  EXPECT_EQ(reps[0], 0.0);
  EXPECT_EQ(reps[1], 10.0);
  EXPECT_EQ(fit.trace.back(), 0.0);
}

TEST(FitLbg, FinalRepsAreCentroidsOfTheirCells) {
  const auto data = small_dataset(80, 6, 201);
  const auto p = random_precoder(2, 6, 202);
  TrainConfig cfg;
  cfg.seed = 6;
  const auto fit = fit_lbg(data, p, 3, cfg);
  const Mat latents = encode_all(p, data);
  const auto cells = assign_cells(fit.codebook, data, p, kInfSpec);
  std::vector<Vec> sums(static_cast<std::size_t>(fit.codebook.count()), Vec::Zero(2));
  std::vector<int> counts(static_cast<std::size_t>(fit.codebook.count()), 0);
  for (int i = 0; i < data.size(); ++i) {
    sums[static_cast<std::size_t>(cells[static_cast<std::size_t>(i)])] += latents.row(i).transpose();
    ++counts[static_cast<std::size_t>(cells[static_cast<std::size_t>(i)])];
  }
  for (int m = 0; m < fit.codebook.count(); ++m) {
    if (counts[static_cast<std::size_t>(m)] == 0) continue;
    const Vec centroid = sums[static_cast<std::size_t>(m)] / counts[static_cast<std::size_t>(m)];
    EXPECT_LT((fit.codebook.reps.row(m).transpose() - centroid).norm(), 1e-10) << "cell " << m;
  }
}

TEST(FitLbg, TraceNonIncreasing) {
  const auto data = small_dataset(60, 6, 211);
  const auto p = random_precoder(2, 6, 212);
  TrainConfig cfg;
  cfg.seed = 14;
  const auto fit = fit_lbg(data, p, 3, cfg);
  for (std::size_t i = 1; i < fit.trace.size(); ++i)
    EXPECT_LE(fit.trace[i], fit.trace[i - 1] + 1e-15) << "round " << i;
}

TEST(FitLbg, NearUniformLatentsApproachTheoreticalDistortion) {
  // Dense uniform latents in [0, 1]: per-cell distortion of an M-level
  // quantizer approaches delta^2/12 with delta = 1/M.
  const int t = 4096;
  Dataset data;
  data.profiles = Mat::Zero(t, 2);
  for (int i = 0; i < t; ++i) data.profiles(i, 0) = (i + 0.5) / t;
  const Precoder p{(Mat(1, 2) << 1.0, 0.0).finished()};
  TrainConfig cfg;
  cfg.seed = 10;
  const auto fit = fit_lbg(data, p, 3, cfg);
  const double delta = 1.0 / 8.0;
  const double theoretical = delta * delta / 12.0;
  EXPECT_NEAR(fit.trace.back(), theoretical, 0.2 * theoretical);
}

TEST(Uniform, MidriseGridOnUnitInterval) {
  Dataset data;
  data.profiles = Mat::Zero(5, 2);
  for (int i = 0; i < 5; ++i) data.profiles(i, 0) = i / 4.0;  // latents 0..1
  const Precoder p{(Mat(1, 2) << 1.0, 0.0).finished()};
  const auto cb = uniform_scalar_quantizer(data, p, 2);
  ASSERT_EQ(cb.count(), 4);
  EXPECT_NEAR(cb.reps(0, 0), 0.125, 1e-15);
  EXPECT_NEAR(cb.reps(1, 0), 0.375, 1e-15);
  EXPECT_NEAR(cb.reps(2, 0), 0.625, 1e-15);
  EXPECT_NEAR(cb.reps(3, 0), 0.875, 1e-15);
  // Interior point, upper boundary, and an out-of-range probe all clamp.
  Vec probe = Vec::Zero(2);
  probe(0) = 0.3;
  EXPECT_EQ(quantize(cb, probe, p, kInfSpec).first, 1);
  probe(0) = 1.0;
  EXPECT_EQ(quantize(cb, probe, p, kInfSpec).first, 3);
  probe(0) = -2.0;
  EXPECT_EQ(quantize(cb, probe, p, kInfSpec).first, 0);
}

TEST(Uniform, RemainderBitsGoToLeadingDims) {
  const auto data = small_dataset(30, 6, 221);
  const auto p = random_precoder(2, 6, 222);
  const auto cb = uniform_scalar_quantizer(data, p, 3);
  ASSERT_EQ(cb.grid.bits.size(), 2u);
  EXPECT_EQ(cb.grid.bits[0], 2);
  EXPECT_EQ(cb.grid.bits[1], 1);
  EXPECT_EQ(cb.count(), 8);
}

TEST(Uniform, ZeroBitDimReconstructsAtMidpoint) {
  const auto data = small_dataset(30, 6, 231);
  const auto p = random_precoder(3, 6, 232);
  const auto cb = uniform_scalar_quantizer(data, p, 2);  // dims get bits 1,1,0
  ASSERT_EQ(cb.grid.bits[2], 0);
  const double mid = 0.5 * (cb.grid.lo(2) + cb.grid.hi(2));
  for (int m = 0; m < cb.count(); ++m) EXPECT_EQ(cb.reps(m, 2), mid);
}

TEST(Uniform, QuantizeRoundTripsEveryCell) {
  const auto data = small_dataset(50, 6, 241);
  const auto p = random_precoder(2, 6, 242);
  const auto cb = uniform_scalar_quantizer(data, p, 4);
  // Decoding a representative must land back in its own cell.
  for (int m = 0; m < cb.count(); ++m) {
    const Vec load = p.basis.transpose() * cb.reps.row(m).transpose();
    EXPECT_EQ(quantize(cb, load, p, kInfSpec).first, m) << "cell " << m;
  }
}

TEST(Quantize, AgreesWithAssignCells) {
  const auto data = small_dataset(30, 6, 251);
  const auto p = random_precoder(2, 6, 252);
  for (const auto mode : {QuantizerMode::goal_oriented, QuantizerMode::lbg}) {
    const auto cb = random_codebook(mode, 3, p, mode == QuantizerMode::goal_oriented ? &kInfSpec : nullptr, 253);
    const auto cells = assign_cells(cb, data, p, kInfSpec);
    for (int i = 0; i < data.size(); ++i) {
      const auto [m, rep] = quantize(cb, data.sample(i), p, kInfSpec);
      EXPECT_EQ(m, cells[static_cast<std::size_t>(i)]) << mode_name(mode) << " sample " << i;
      EXPECT_EQ(rep, Vec(cb.reps.row(m).transpose()));
    }
  }
}

TEST(SplitReps, KeepsOriginalsAndStaysDistinct) {
  test::Rng rng(261);
  const Mat reps = test::random_mat(rng, 4, 3, -1.0, 1.0);
  const Mat doubled = split_reps(reps, 77);
  ASSERT_EQ(doubled.rows(), 8);
  EXPECT_EQ(doubled.topRows(4), reps);
  for (int a = 0; a < 8; ++a)
    for (int b = a + 1; b < 8; ++b) EXPECT_NE(doubled.row(a), doubled.row(b));
  // Copies stay close to their source.
  for (int r = 0; r < 4; ++r)
    EXPECT_LT((doubled.row(4 + r) - doubled.row(r)).norm(), 1e-2);
}

TEST(ModeNames, RoundTrip) {
  for (const auto mode :
       {QuantizerMode::goal_oriented, QuantizerMode::lbg, QuantizerMode::uniform_scalar})
    EXPECT_EQ(mode_from_name(mode_name(mode)), mode);
  EXPECT_THROW(mode_from_name("NOPE"), std::invalid_argument);
}

TEST(Regression, GoqBeatsLbgOnGoalLossTwoCluster) {
  SyntheticParams params;
  params.two_cluster = true;
  const Dataset data = gen_synthetic(160, 12, 7, params);
  const TaskSpec spec(NormOrder::inf(), 6.0);
  const auto fit = fit_linear_precoder(data, spec, 1);
  TrainConfig cfg;
  cfg.seed = 7;
  const auto goq = fit_goq(data, fit.precoder, spec, 2, cfg);
  const auto lbg = fit_lbg(data, fit.precoder, 2, cfg);
  const double goq_loss = goal_loss(goq.codebook, data, fit.precoder, spec);
  const double lbg_loss = goal_loss(lbg.codebook, data, fit.precoder, spec);
  EXPECT_LE(goq_loss, lbg_loss + 1e-12);
}

}  // namespace
}  // namespace goalcomp
