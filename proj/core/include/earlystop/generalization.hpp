#pragma once

#include <cstdint>
#include <functional>

#include "earlystop/measure.hpp"
#include "earlystop/problem.hpp"
#include "earlystop/rng.hpp"
#include "earlystop/run_record.hpp"

namespace earlystop {

// Finite-support stand-in for the data distribution, with its third moment
// cached so population bounds can be formed without re-scanning the support.
struct TestDistribution {
  EmpiricalMeasure mu;
  double third_moment_j;

  explicit TestDistribution(EmpiricalMeasure measure)
      : mu(std::move(measure)), third_moment_j(third_moment(mu)) {}
};

// 2 epsilon + 2 G^2 kappa_d J n^(-3/d): population-gradient bound for a
// distribution with finite third moment (d >= 3).
double generalization_bound_continuous(double epsilon, double g_lip, double kappa_d,
                                       double j_moment, std::int64_t n_t, int d);

// 2 epsilon + 168 G^2 sqrt(m / n): population-gradient bound for a
// distribution on at most m points of the unit ball.
double generalization_bound_discrete(double epsilon, double g_lip, std::int64_t m_support,
                                     std::int64_t n_t);

// One algorithm execution on freshly sampled train/validation objectives.
using AlgorithmRunner =
    std::function<RunRecord(FiniteSumObjective train, FiniteSumObjective validation,
                            const TrialRng& rng)>;

struct GapEstimate {
  double mean_grad_sq_g = 0.0;
  double ci95 = 0.0;
  std::size_t trials = 0;
};

// Monte Carlo estimate of the squared population-gradient norm at the
// returned iterate: each trial samples Y_T and Y_V of the given sizes from
// mu, runs the algorithm, and evaluates ||grad f_G(x)||^2 exactly over the
// finite support. Needs at least two trials for the confidence half-width.
GapEstimate mc_generalization_gap(const TestDistribution& dist, const LossFunction& loss,
                                  const AlgorithmRunner& runner, std::size_t n_t, std::size_t n_v,
                                  std::size_t trials, std::uint64_t seed);

}  // namespace earlystop
