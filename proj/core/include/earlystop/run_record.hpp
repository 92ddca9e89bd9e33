#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace earlystop {

// One step of the geometric-drift audit trail: the certified envelope V_t,
// the injected noise level U_t, and the realized squared bias norm.
struct DriftStep {
  double v = 0.0;
  double u = 0.0;
  double delta_sq = 0.0;
};

// One decentralized round: scaled parameter dispersion V_t and the gradient
// noise term U_t entering the drift recursion V_{t+1} <= alpha V_t + U_t.
struct DispersionStep {
  double v = 0.0;
  double u = 0.0;
};

// A recorded inner step of a variance-reduced run: the inner iterate, the
// epoch anchor, and the full gradient at the anchor.
struct SvrgInnerState {
  Eigen::VectorXd x;
  Eigen::VectorXd anchor;
  Eigen::VectorXd anchor_gradient;
};

// Outcome of one algorithm execution. tau is the stopping iterate index for
// the step-indexed algorithms and the epoch count for the variance-reduced
// one; a cap hit is an explicit outcome, never an exception.
struct RunRecord {
  std::uint64_t tau = 0;
  bool cap_hit = false;
  std::uint64_t ifo_count = 0;
  Eigen::VectorXd final_x;

  // Squared gradient norm at every stopping check, in check order.
  std::vector<double> check_values;
  // The check value at termination and the training-gradient counterpart at
  // the returned iterate (diagnostic; computed outside the oracle budget).
  double final_grad_sq_v = std::numeric_limits<double>::quiet_NaN();
  double final_grad_sq_t = std::numeric_limits<double>::quiet_NaN();

  // Drift audit for biased runs; dispersion audit for decentralized runs
  // (optional); recorded inner states for variance-reduced runs (optional).
  std::vector<DriftStep> drift_audit;
  std::vector<DispersionStep> dispersion_audit;
  std::vector<SvrgInnerState> inner_states;

  // Drift constants in effect for the run (zero in the unbiased case).
  double drift_alpha = 0.0;
  double drift_beta = 0.0;

  // Largest gap between the incrementally maintained node average and the
  // average recomputed from the states (decentralized audit runs only).
  double consensus_drift = 0.0;
};

}  // namespace earlystop
