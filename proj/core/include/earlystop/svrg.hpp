#pragma once

#include <cstdint>
#include <vector>

#include "earlystop/problem.hpp"
#include "earlystop/rng.hpp"
#include "earlystop/run_record.hpp"

namespace earlystop {

struct SvrgConfig {
  double eta = 0.1;                     // inner-loop step size
  std::int64_t m = 1;                   // inner-loop length
  double epsilon = 1e-2;                // threshold on ||grad f_T||^2 at the anchor
  std::uint64_t max_epochs = 100'000;   // cap on the epoch count
  std::size_t record_inner_limit = 0;   // keep at most this many inner states
};

struct SvrgHyperparams {
  double eta = 0.0;
  std::int64_t m = 0;
};

// eta = 1 / (4 L n^(2/3)), m = floor(4 n / 3).
SvrgHyperparams svrg_hyperparams(std::int64_t n_t, double l_smooth);

// Early-stopped variance-reduced run: every epoch computes the full gradient
// at the anchor (n IFO), stops if its squared norm is at or below epsilon,
// and otherwise takes m inner steps with direction
//   grad f(y, x) - grad f(y, anchor) + g        (2 IFO each)
// sampling y uniformly from the trial's stream 1. tau counts epochs.
RunRecord run_svrg(FiniteSumObjective obj_t, const Eigen::VectorXd& x1, const SvrgConfig& config,
                   const TrialRng& rng);

// Backward recursion c_m = 0, c_t = c_{t+1} (1 + eta beta + 2 eta^2 L^2) +
// eta^2 L^3 with step coefficients Gamma_t = eta - c_{t+1} eta / beta -
// eta^2 L - 2 c_{t+1} eta^2. gamma = min_t Gamma_t; the certificate is valid
// when every Gamma_t is positive.
struct GammaCertificate {
  double beta_analysis = 0.0;
  std::vector<double> c_sequence;  // c_sequence[t] = c_t for t = 0..m
  double gamma = 0.0;
  bool valid = false;
};

GammaCertificate gamma_from_recursion(double eta, double beta_analysis, std::int64_t m,
                                      double l_smooth);

// Maximizes gamma over a logarithmic beta grid (61 points in [1e-3, 1e3])
// at the standard hyperparameters for n and L, and checks the floor
// gamma >= 1 / (40 L n^(2/3)).
struct GammaSearch {
  double gamma_star = 0.0;
  double beta_star = 0.0;
  bool passes = false;
};

GammaSearch gamma_lower_bound_check(std::int64_t n, double l_smooth);

// 1 + 40 L n^(2/3) f_gap / epsilon epochs.
double svrg_tau_bound(double l_smooth, std::int64_t n_t, double f_gap, double epsilon);

// tau (n + 2 m) oracle calls for an epoch count of tau.
double svrg_ifo_bound(double tau_bound, std::int64_t n_t, std::int64_t m);

}  // namespace earlystop
