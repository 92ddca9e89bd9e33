#include "earlystop/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace earlystop {

namespace {

constexpr double kUniformWeightTol = 1e-12;

Eigen::VectorXd tanh_componentwise(const Eigen::VectorXd& x) {
  return x.array().tanh().matrix();
}

}  // namespace

LossFunction quadratic_problem() {
  LossFunction f;
  f.name = "quadratic";
  f.value = [](const Eigen::VectorXd& y, const Eigen::VectorXd& x) {
    return 0.5 * (x - y).squaredNorm();
  };
  f.gradient = [](const Eigen::VectorXd& y, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return x - y;
  };
  f.smoothness_l = 1.0;
  f.data_lipschitz_g = 1.0;
  f.lower_bound = 0.0;
  return f;
}

LossFunction tanh_composite_problem(const EmpiricalMeasure& targets, double radius_j) {
  if (!(radius_j > 0.0)) throw std::invalid_argument("data radius must be positive");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets.point(i).norm() > radius_j * (1.0 + 1e-12))
      throw std::invalid_argument("target " + std::to_string(i) + " lies outside the data radius");
  }
  const Eigen::Index d = targets.dimension();

  LossFunction f;
  f.name = "tanh_composite";
  f.value = [](const Eigen::VectorXd& y, const Eigen::VectorXd& x) {
    return 0.5 * (tanh_componentwise(x) - y).squaredNorm();
  };
  f.gradient = [](const Eigen::VectorXd& y, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::ArrayXd t = x.array().tanh();
    return ((t - y.array()) * (1.0 - t.square())).matrix();
  };
  // d/dy of the gradient is -diag(tanh'), operator norm <= 1.
  f.data_lipschitz_g = 1.0;
  f.lower_bound = 0.0;

  // Certify the x-smoothness constant on a fixed probe grid. The probe seed
  // depends only on (d, radius_j) so the constant is reproducible.
  RngStream probe(mix64(0x6C5355ULL + 0x9E37ULL * static_cast<std::uint64_t>(d)) ^
                  std::hash<double>{}(radius_j));
  double max_ratio = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Eigen::VectorXd y = probe.ball_vector(d, radius_j);
    const Eigen::VectorXd x1 = probe.ball_vector(d, 3.0);
    const Eigen::VectorXd x2 = x1 + 1e-3 * probe.unit_vector(d);
    const double num = (f.gradient(y, x1) - f.gradient(y, x2)).norm();
    const double den = (x1 - x2).norm();
    if (den > 0.0) max_ratio = std::max(max_ratio, num / den);
  }
  f.smoothness_l = 1.25 * max_ratio;
  return f;
}

FiniteSumObjective::FiniteSumObjective(LossFunction loss, EmpiricalMeasure dataset)
    : loss_(std::move(loss)), dataset_(std::move(dataset)) {
  const double w = 1.0 / static_cast<double>(dataset_.size());
  for (std::size_t i = 0; i < dataset_.size(); ++i) {
    if (std::abs(dataset_.weight(i) - w) > kUniformWeightTol)
      throw std::invalid_argument("finite-sum objectives require uniformly weighted datasets");
  }
}

void FiniteSumObjective::check_parameter(const Eigen::VectorXd& x) const {
  if (x.size() != dataset_.dimension())
    throw std::invalid_argument("parameter dimension " + std::to_string(x.size()) +
                                " does not match the data dimension " +
                                std::to_string(dataset_.dimension()));
}

double FiniteSumObjective::value(const Eigen::VectorXd& x) const {
  check_parameter(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < dataset_.size(); ++i) acc += loss_.value(dataset_.point(i), x);
  return acc / static_cast<double>(dataset_.size());
}

Eigen::VectorXd FiniteSumObjective::gradient(const Eigen::VectorXd& x) {
  check_parameter(x);
  ifo_ += dataset_.size();
  // Unweighted sum then one division, so enumerating the stochastic oracle's
  // outcomes reproduces this value bit for bit.
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < dataset_.size(); ++i) acc += loss_.gradient(dataset_.point(i), x);
  return acc / static_cast<double>(dataset_.size());
}

Eigen::VectorXd FiniteSumObjective::stochastic_gradient(const Eigen::VectorXd& x, RngStream& rng) {
  check_parameter(x);
  const std::size_t i = rng.next_index(dataset_.size());
  ifo_ += 1;
  return loss_.gradient(dataset_.point(i), x);
}

Eigen::VectorXd FiniteSumObjective::example_gradient(std::size_t index, const Eigen::VectorXd& x) {
  check_parameter(x);
  if (index >= dataset_.size()) throw std::out_of_range("example index out of range");
  ifo_ += 1;
  return loss_.gradient(dataset_.point(index), x);
}

double FiniteSumObjective::empirical_variance_bound(
    const std::vector<Eigen::VectorXd>& probes) const {
  double worst = 0.0;
  for (const Eigen::VectorXd& x : probes) {
    const Eigen::VectorXd mean = mean_gradient(loss_, dataset_, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < dataset_.size(); ++i)
      acc += (loss_.gradient(dataset_.point(i), x) - mean).squaredNorm();
    worst = std::max(worst, acc / static_cast<double>(dataset_.size()));
  }
  return worst;
}

Eigen::VectorXd mean_gradient(const LossFunction& loss, const EmpiricalMeasure& data,
                              const Eigen::VectorXd& x) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    acc += data.weight(i) * loss.gradient(data.point(i), x);
  return acc;
}

double mean_value(const LossFunction& loss, const EmpiricalMeasure& data,
                  const Eigen::VectorXd& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    acc += data.weight(i) * loss.value(data.point(i), x);
  return acc;
}

Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x) {
  const double h = 1e-5 * (1.0 + x.norm());
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double saved = probe[k];
    probe[k] = saved + h;
    const double fp = f(probe);
    probe[k] = saved - h;
    const double fm = f(probe);
    probe[k] = saved;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace earlystop
