#pragma once

#include <cstdint>
#include <optional>

#include "earlystop/bound_report.hpp"
#include "earlystop/problem.hpp"
#include "earlystop/rng.hpp"
#include "earlystop/run_record.hpp"

namespace earlystop {

struct SgdConfig {
  double eta = 0.1;                    // constant step size
  std::int64_t m = 1;                  // updates between stopping checks
  double epsilon = 1e-2;               // threshold on ||grad f_V||^2
  std::uint64_t max_iters = 1'000'000; // largest iterate index before a cap hit
};

// Update-direction bias generator. "none" leaves the updates unbiased. "ar1"
// injects a synthetic drift Delta_t = sqrt(V_t) * (random unit vector) whose
// envelope follows V_1 = beta, V_t = alpha V_{t-1} + U_{t-1} with
// U ~ Uniform[0, 2 beta], so the certified trail satisfies the drift
// condition with equality and E[U_t] = beta.
struct BiasSpec {
  enum class Kind { none, ar1 };
  Kind kind = Kind::none;
  double alpha = 0.0;
  double beta = 0.0;                 // absolute drift level
  std::optional<double> rate_r;      // when set, beta = eta * rate_r at run time

  double resolved_beta(double eta) const { return rate_r ? *rate_r * eta : beta; }
};

// Early-stopped stochastic gradient descent from the initial point x1: the
// squared validation-gradient norm is checked at iterates 1, m+1, 2m+1, ...;
// every failed check is followed by m updates x <- x - eta (v + Delta) with v
// a one-sample stochastic gradient of the training objective. The trial's
// stream 1 drives the gradient sampling and stream 0 the bias noise.
RunRecord run_sgd(FiniteSumObjective obj_t, FiniteSumObjective obj_v, const Eigen::VectorXd& x1,
                  const SgdConfig& config, const BiasSpec& bias, const TrialRng& rng);

// Step size coupled to the stopping threshold:
//   c * min{ 1/L, (epsilon/2 - G^2 d1^2) / (m (2 L sigma2 + 2 R/(1-alpha))) }.
// Degenerates to c/L when sigma2 = R = 0; requires epsilon > 2 G^2 d1^2.
double sgd_step_size(double c, double l_smooth, double epsilon, std::int64_t m, double g_lip,
                     double d1, double sigma2, double rate_r, double alpha);

struct SgdBoundParams {
  double l_smooth = 1.0;
  double eta = 0.1;
  std::int64_t m = 1;
  double epsilon = 1e-2;
  double sigma2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double g_lip = 0.0;
  double d1 = 0.0;
  double f_gap = 0.0;  // f_T(x_1) - lower bound
};

// Expected-stopping-time bound for an explicit step size eta <= 1/L. Valid
// only when epsilon - 4 L m eta sigma2 - 4 m beta/(1-alpha) - 2 G^2 d1^2 > 0;
// otherwise the report is flagged non-applicable.
BoundReport sgd_tau_bound(const SgdBoundParams& p);

struct CoupledBoundParams {
  double c = 0.5;
  double l_smooth = 1.0;
  std::int64_t m = 1;
  double epsilon = 1e-2;
  double sigma2 = 0.0;
  double rate_r = 0.0;   // drift level per unit step size (beta = eta R)
  double alpha = 0.0;
  double g_lip = 0.0;
  double d1 = 0.0;
  double f_gap = 0.0;
};

// Expected-stopping-time bound at the coupled step size of sgd_step_size:
//   4 m^2 f_gap (L sigma2 + R/(1-alpha)) / ((1-c) c (epsilon/2 - A)^2)
// + (2 L m f_gap + m c A + c epsilon/2) / ((1-c) c (epsilon/2 - A))
// + c/(1-c),       with A = G^2 d1^2.
BoundReport sgd_tau_bound_coupled(const CoupledBoundParams& p);

// (sqrt(epsilon) + G d1)^2: what the stopping rule guarantees for the
// training gradient at the returned iterate.
double post_stationarity_bound(double epsilon, double g_lip, double d1);

// tau (n_V / m + 1) + n_V oracle calls for a stopping time of tau.
double sgd_ifo_bound(double tau_bound, std::int64_t m, std::int64_t n_v);

}  // namespace earlystop
