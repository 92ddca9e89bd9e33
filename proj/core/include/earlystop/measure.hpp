#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "earlystop/rng.hpp"

namespace earlystop {

// Finitely supported probability measure on R^q. Weights are nonnegative,
// sum to one within 1e-12, and zero-weight atoms are dropped on construction.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::vector<Eigen::VectorXd> points, std::vector<double> weights);

  static EmpiricalMeasure uniform(std::vector<Eigen::VectorXd> points);
  static EmpiricalMeasure dirac(const Eigen::VectorXd& point);

  // CSV: one row per atom, columns are coordinates. A header row whose last
  // column is named "weight" marks per-atom weights (normalized on load);
  // without it all columns are coordinates and weights are uniform.
  static EmpiricalMeasure load_csv(const std::string& path);
  void save_csv(const std::string& path) const;

  Eigen::Index dimension() const { return points_.front().size(); }
  std::size_t size() const { return points_.size(); }
  const Eigen::VectorXd& point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<Eigen::VectorXd>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  Eigen::VectorXd mean() const;

 private:
  std::vector<Eigen::VectorXd> points_;
  std::vector<double> weights_;
};

// Transport plan between two finite measures; entry (i, j) is the mass moved
// from atom i of the source onto atom j of the target.
struct Coupling {
  Eigen::MatrixXd plan;
};

// Largest deviation of the plan's marginals from the two weight vectors.
double coupling_marginal_error(const Coupling& coupling, const EmpiricalMeasure& mu1,
                               const EmpiricalMeasure& mu2);

// Exact p-Wasserstein distance between finite measures (p >= 1), solved as a
// transportation linear program on the dense |mu1| x |mu2| cost matrix.
double wasserstein(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p);

// Minimizer of the transport program behind wasserstein(); ties among optimal
// plans are broken arbitrarily.
Coupling optimal_coupling(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p);

// Uniform measure on n i.i.d. draws from mu (atoms kept with multiplicity).
EmpiricalMeasure sample_empirical(const EmpiricalMeasure& mu, std::size_t n, RngStream& rng);

// (E ||y||^3)^(1/3) over the measure.
double third_moment(const EmpiricalMeasure& mu);

// kappa_d * J * n^(-3/d): moment bound on E[d_2(mu, mu_n)^2], continuous case
// (requires d >= 3). kappa_d is a caller-supplied dimensional constant.
double dereich_bound(double kappa_d, double j_moment, std::size_t n, int d);

// 84 * sqrt(m / n): bound on E[d_2(mu, mu_n)^2] for measures supported on at
// most m points of the unit ball.
double discrete_support_bound(std::size_t m_support, std::size_t n);

}  // namespace earlystop
