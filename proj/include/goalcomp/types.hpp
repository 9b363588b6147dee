#pragma once

#include <Eigen/Dense>

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace goalcomp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Norm exponent of the scheduling objective: an integer p >= 1 or infinity.
class NormOrder {
 public:
  static NormOrder finite(int p) {
    if (p < 1) throw std::invalid_argument("NormOrder: p must be >= 1, got " + std::to_string(p));
    return NormOrder(p);
  }
  static NormOrder inf() { return NormOrder(kInf); }

  /// Parses "inf" (case-insensitive) or a positive integer literal.
  static NormOrder parse(const std::string& text);

  bool is_inf() const { return p_ == kInf; }
  int exponent() const {
    if (is_inf()) throw std::logic_error("NormOrder: infinite order has no finite exponent");
    return p_;
  }
  std::string str() const { return is_inf() ? "inf" : std::to_string(p_); }

  friend bool operator==(NormOrder a, NormOrder b) { return a.p_ == b.p_; }
  friend bool operator!=(NormOrder a, NormOrder b) { return a.p_ != b.p_; }

 private:
  static constexpr int kInf = -1;
  explicit NormOrder(int p) : p_(p) {}
  int p_;
};

inline NormOrder NormOrder::parse(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "inf" || t == "infinity") return inf();
  std::size_t pos = 0;
  int p = 0;
  try {
    p = std::stoi(t, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("NormOrder: cannot parse '" + text + "'");
  }
  if (pos != t.size()) throw std::invalid_argument("NormOrder: cannot parse '" + text + "'");
  return finite(p);
}

/// Immutable description of one scheduling task: norm order and energy budget E (kWh).
struct TaskSpec {
  TaskSpec(NormOrder p_, double energy_) : p(p_), energy(energy_) {
    if (!(energy > 0.0))
      throw std::invalid_argument("TaskSpec: energy budget must be positive, got " +
                                  std::to_string(energy_));
  }

  NormOrder p;
  double energy;
};

/// Shared knobs for the trainers. Defaults follow the reference protocol.
struct TrainConfig {
  int max_iterations = 500;        // gradient-descent iteration cap
  int max_backtracks = 40;         // line-search halvings before giving up
  double backtrack_factor = 0.5;   // step multiplier per backtrack
  double rel_tol = 1e-4;           // stop when relative improvement drops below
  double step_eps = 1e-12;         // initial step = 1 / (||G||_F + step_eps)
  bool centered_klt = false;       // subtract the mean before the KLT eigenproblem

  int codebook_rounds = 100;       // codebook alternation cap
  int codebook_restarts = 4;       // random initializations, best kept
  bool local_refine = false;       // derivative-free polish of codebook updates

  int outer_rounds = 10;           // codesign alternations
  int noisy_draws = 10;            // Monte-Carlo reconstructions per sample

  std::uint64_t seed = 0;
};

}  // namespace goalcomp
