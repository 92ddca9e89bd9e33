#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "earlystop/bound_report.hpp"
#include "earlystop/problem.hpp"
#include "earlystop/rng.hpp"
#include "earlystop/run_record.hpp"
#include "earlystop/sgd.hpp"

namespace earlystop {

// max_{i >= 2} |lambda_i(a)|^2 with eigenvalues sorted in nonincreasing
// order; a must be symmetric, entrywise nonnegative and row-stochastic.
// Values >= 1 are returned as-is (the run entry point rejects them).
double diffusion_coefficient(const Eigen::MatrixXd& a);

// Symmetric stochastic communication matrix with its diffusion coefficient
// cached at construction.
class ConnectivityMatrix {
 public:
  explicit ConnectivityMatrix(Eigen::MatrixXd a);
  static ConnectivityMatrix load_csv(const std::string& path);

  const Eigen::MatrixXd& matrix() const { return a_; }
  int nodes() const { return static_cast<int>(a_.rows()); }
  double rho() const { return rho_; }

 private:
  Eigen::MatrixXd a_;
  double rho_;
};

enum class Topology { complete, ring, star };

// Standard symmetric stochastic matrices. "complete" is the all-1/M matrix
// (self_weight unused); "ring" gives self_weight to the diagonal and splits
// the rest over the two neighbours; "star" gives the spokes self_weight and
// routes the rest through the hub. Combinations that break nonnegativity are
// rejected.
ConnectivityMatrix make_topology(Topology kind, int m_nodes, double self_weight = 0.5);

struct Dispersion {
  double v = 0.0;
  double u = 0.0;
};

// Drift quantities of one decentralized round:
//   V = (L^2 / M) sum_i ||x_i - xbar||^2
//   U = (32 eta^2 L^2 / (M (1 - sqrt(rho)))) sum_i ||v_i - grad_i||^2.
Dispersion dispersion_quantities(const std::vector<Eigen::VectorXd>& node_states,
                                 const std::vector<Eigen::VectorXd>& node_stoch_grads,
                                 const std::vector<Eigen::VectorXd>& node_exact_grads,
                                 const ConnectivityMatrix& conn, double eta, double l_smooth);

// Contraction factor (3 + sqrt(rho))^2 / 16 of the dispersion recursion.
double dsgd_alpha(double rho);

// Drift level eta * 8 L sigma2 / (1 - sqrt(rho)).
double dsgd_beta(double eta, double l_smooth, double sigma2, double rho);

// Early-stopped decentralized SGD with equal initialization x1 at every
// node. Round t updates every node from the same snapshot,
//   x_i <- sum_j a_ij x_j - eta v_i,
// with v_i a one-sample stochastic gradient at node i drawn from the trial's
// stream i, and the stopping check runs on the node average. Requires
// rho < 1. When record_dispersion is set, the exact per-node gradients are
// evaluated each round (outside the oracle budget) to log the drift trail.
RunRecord run_dsgd(FiniteSumObjective obj_t, FiniteSumObjective obj_v, const Eigen::VectorXd& x1,
                   const ConnectivityMatrix& conn, const SgdConfig& config, const TrialRng& rng,
                   bool record_dispersion = false);

// (c / L) min{ 1, (epsilon/2 - G^2 d1^2) /
//              (2 m sigma2 (1 + 128 / (7 + 5 rho + rho^(3/2) - 13 sqrt(rho)))) }.
// Requires c <= (1 - sqrt(rho)) / (4 sqrt(2)) and epsilon > 2 G^2 d1^2;
// degenerates to c/L when sigma2 = 0.
double dsgd_step_size(double c, double l_smooth, double epsilon, std::int64_t m, double g_lip,
                      double d1, double sigma2, double rho);

struct DsgdBoundParams {
  double c = 0.1;
  double l_smooth = 1.0;
  std::int64_t m = 1;
  double epsilon = 1e-2;
  double sigma2 = 0.0;
  double rho = 0.0;
  double g_lip = 0.0;
  double d1 = 0.0;
  double f_gap = 0.0;
};

// Expected-stopping-time bound for decentralized SGD: the coupled-step bound
// instantiated with R = 8 L sigma2 / (1 - sqrt(rho)) and
// alpha = (3 + sqrt(rho))^2 / 16. params carries both the exact value and
// the looser form using R/(1-alpha) <= 128 L sigma2 / (7 (1 - sqrt(rho))^2)
// under the key "value_simplified".
BoundReport dsgd_tau_bound(const DsgdBoundParams& p);

// tau (n_V / m + M) + n_V oracle calls for a stopping time of tau across M
// nodes.
double dsgd_ifo_bound(double tau_bound, std::int64_t m, std::int64_t n_v, int m_nodes);

}  // namespace earlystop
