#include "earlystop/generalization.hpp"

#include <cmath>
#include <stdexcept>

#include "earlystop/stats.hpp"

namespace earlystop {

double generalization_bound_continuous(double epsilon, double g_lip, double kappa_d,
                                       double j_moment, std::int64_t n_t, int d) {
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
  if (n_t < 1) throw std::invalid_argument("training size must be positive");
  return 2.0 * epsilon +
         2.0 * g_lip * g_lip *
             dereich_bound(kappa_d, j_moment, static_cast<std::size_t>(n_t), d);
}

double generalization_bound_discrete(double epsilon, double g_lip, std::int64_t m_support,
                                     std::int64_t n_t) {
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
  if (m_support < 1 || n_t < 1) throw std::invalid_argument("sizes must be positive");
  return 2.0 * epsilon +
         2.0 * g_lip * g_lip *
             discrete_support_bound(static_cast<std::size_t>(m_support),
                                    static_cast<std::size_t>(n_t));
}

GapEstimate mc_generalization_gap(const TestDistribution& dist, const LossFunction& loss,
                                  const AlgorithmRunner& runner, std::size_t n_t, std::size_t n_v,
                                  std::size_t trials, std::uint64_t seed) {
  if (trials < 2)
    throw std::invalid_argument("the gap estimate needs at least two trials for its interval");
  if (n_t == 0 || n_v == 0) throw std::invalid_argument("dataset sizes must be positive");

  RunningStat stat;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const TrialRng rng(seed, trial);
    RngStream train_stream = rng.stream(kTrainSampleNode);
    RngStream val_stream = rng.stream(kValSampleNode);
    FiniteSumObjective obj_t(loss, sample_empirical(dist.mu, n_t, train_stream));
    FiniteSumObjective obj_v(loss, sample_empirical(dist.mu, n_v, val_stream));
    const RunRecord record = runner(std::move(obj_t), std::move(obj_v), rng);
    stat.add(mean_gradient(loss, dist.mu, record.final_x).squaredNorm());
  }

  GapEstimate out;
  out.mean_grad_sq_g = stat.mean();
  out.ci95 = stat.ci95().value();
  out.trials = trials;
  return out;
}

}  // namespace earlystop
