#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "earlystop/measure.hpp"
#include "earlystop/rng.hpp"

namespace earlystop {

// Per-example loss oracle f(y, x) with certified constants:
//   smoothness_l     Lipschitz constant of the gradient in x,
//   data_lipschitz_g Lipschitz constant of the gradient in y,
//   lower_bound      a global lower bound on the loss value.
struct LossFunction {
  std::function<double(const Eigen::VectorXd& y, const Eigen::VectorXd& x)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& y, const Eigen::VectorXd& x)> gradient;
  double smoothness_l = 0.0;
  double data_lipschitz_g = 0.0;
  double lower_bound = 0.0;
  std::string name;
};

// f(y, x) = 0.5 ||x - y||^2 with exact constants L = G = 1, lower bound 0.
LossFunction quadratic_problem();

// f(y, x) = 0.5 ||tanh(x) - y||^2 (componentwise tanh). Targets must satisfy
// ||y|| <= radius_j. G = 1 exactly; L is certified numerically as 1.25 times
// the largest gradient-difference ratio over 10^4 probe pairs with
// ||x|| <= 3, ||y|| <= radius_j, and stored on the returned instance.
LossFunction tanh_composite_problem(const EmpiricalMeasure& targets, double radius_j);

// Finite-sum objective (1/n) sum_y f(y, x) over a uniformly weighted dataset,
// with incremental-first-order-oracle accounting. Each run owns its copy; the
// counter has a single writer.
class FiniteSumObjective {
 public:
  FiniteSumObjective(LossFunction loss, EmpiricalMeasure dataset);

  std::size_t size() const { return dataset_.size(); }
  const EmpiricalMeasure& dataset() const { return dataset_; }
  const LossFunction& loss() const { return loss_; }
  std::uint64_t ifo_count() const { return ifo_; }

  // Mean loss value; diagnostic, not counted against the oracle budget.
  double value(const Eigen::VectorXd& x) const;

  // Mean gradient over the dataset; counts n oracle calls.
  Eigen::VectorXd gradient(const Eigen::VectorXd& x);

  // Gradient at one uniformly drawn example; counts one oracle call.
  Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& x, RngStream& rng);

  // Gradient at a chosen example; counts one oracle call.
  Eigen::VectorXd example_gradient(std::size_t index, const Eigen::VectorXd& x);

  // max over probes of (1/n) sum_y ||grad f(y, x) - grad mean(x)||^2; an
  // empirical certificate for the stochastic-gradient variance level.
  double empirical_variance_bound(const std::vector<Eigen::VectorXd>& probes) const;

 private:
  void check_parameter(const Eigen::VectorXd& x) const;

  LossFunction loss_;
  EmpiricalMeasure dataset_;
  std::uint64_t ifo_ = 0;
};

// Uncounted full mean gradient / value over an arbitrary weighted measure;
// used for diagnostics, oracles, and population quantities.
Eigen::VectorXd mean_gradient(const LossFunction& loss, const EmpiricalMeasure& data,
                              const Eigen::VectorXd& x);
double mean_value(const LossFunction& loss, const EmpiricalMeasure& data,
                  const Eigen::VectorXd& x);

// Central differences with step h = 1e-5 * (1 + ||x||).
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x);

}  // namespace earlystop
