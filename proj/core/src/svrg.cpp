#include "earlystop/svrg.hpp"

#include <cmath>
#include <stdexcept>

namespace earlystop {

SvrgHyperparams svrg_hyperparams(std::int64_t n_t, double l_smooth) {
  if (n_t < 1) throw std::invalid_argument("training size must be positive");
  if (!(l_smooth > 0.0)) throw std::invalid_argument("smoothness constant must be positive");
  SvrgHyperparams h;
  h.eta = 1.0 / (4.0 * l_smooth * std::pow(static_cast<double>(n_t), 2.0 / 3.0));
  h.m = static_cast<std::int64_t>(std::floor(4.0 * static_cast<double>(n_t) / 3.0));
  return h;
}

RunRecord run_svrg(FiniteSumObjective obj_t, const Eigen::VectorXd& x1, const SvrgConfig& config,
                   const TrialRng& rng) {
  if (!(config.eta > 0.0)) throw std::invalid_argument("step size must be positive");
  if (config.m < 1) throw std::invalid_argument("inner-loop length must be at least 1");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("stopping threshold must be positive");
  if (config.max_epochs < 1) throw std::invalid_argument("epoch cap must be positive");

  RngStream sample_stream = rng.stream(1);
  RunRecord record;

  Eigen::VectorXd anchor = x1;
  for (std::uint64_t epoch = 1;; ++epoch) {
    const Eigen::VectorXd g = obj_t.gradient(anchor);  // n IFO
    const double check = g.squaredNorm();
    record.check_values.push_back(check);
    if (check <= config.epsilon) {
      record.tau = epoch;
      record.final_grad_sq_v = check;
      record.final_grad_sq_t = check;
      record.final_x = anchor;
      break;
    }
    if (epoch >= config.max_epochs) {
      record.tau = epoch;
      record.cap_hit = true;
      record.final_grad_sq_v = check;
      record.final_grad_sq_t = check;
      record.final_x = anchor;
      break;
    }
    Eigen::VectorXd x = anchor;
    for (std::int64_t t = 0; t < config.m; ++t) {
      if (record.inner_states.size() < config.record_inner_limit)
        record.inner_states.push_back({x, anchor, g});
      const std::size_t i = sample_stream.next_index(obj_t.size());
      const Eigen::VectorXd direction =
          obj_t.example_gradient(i, x) - obj_t.example_gradient(i, anchor) + g;  // 2 IFO
      x -= config.eta * direction;
    }
    anchor = x;
  }

  record.ifo_count = obj_t.ifo_count();
  return record;
}

GammaCertificate gamma_from_recursion(double eta, double beta_analysis, std::int64_t m,
                                      double l_smooth) {
  if (!(eta > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!(beta_analysis > 0.0))
    throw std::invalid_argument("the analysis constant beta must be positive");
  if (m < 1) throw std::invalid_argument("inner-loop length must be at least 1");
  if (!(l_smooth > 0.0)) throw std::invalid_argument("smoothness constant must be positive");

  GammaCertificate cert;
  cert.beta_analysis = beta_analysis;
  cert.c_sequence.assign(static_cast<std::size_t>(m) + 1, 0.0);
  const double growth = 1.0 + eta * beta_analysis + 2.0 * eta * eta * l_smooth * l_smooth;
  const double inject = eta * eta * l_smooth * l_smooth * l_smooth;
  for (std::int64_t t = m - 1; t >= 0; --t)
    cert.c_sequence[static_cast<std::size_t>(t)] =
        cert.c_sequence[static_cast<std::size_t>(t) + 1] * growth + inject;

  cert.valid = true;
  cert.gamma = std::numeric_limits<double>::infinity();
  for (std::int64_t t = 0; t < m; ++t) {
    const double c_next = cert.c_sequence[static_cast<std::size_t>(t) + 1];
    const double gamma_t = eta - c_next * eta / beta_analysis - eta * eta * l_smooth -
                           2.0 * c_next * eta * eta;
    cert.gamma = std::min(cert.gamma, gamma_t);
    if (!(gamma_t > 0.0)) cert.valid = false;
  }
  return cert;
}

GammaSearch gamma_lower_bound_check(std::int64_t n, double l_smooth) {
  const SvrgHyperparams h = svrg_hyperparams(n, l_smooth);
  GammaSearch out;
  out.gamma_star = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 60; ++k) {
    const double beta = std::pow(10.0, -3.0 + 6.0 * static_cast<double>(k) / 60.0);
    const GammaCertificate cert = gamma_from_recursion(h.eta, beta, h.m, l_smooth);
    if (cert.valid && cert.gamma > out.gamma_star) {
      out.gamma_star = cert.gamma;
      out.beta_star = beta;
    }
  }
  const double floor_value =
      1.0 / (40.0 * l_smooth * std::pow(static_cast<double>(n), 2.0 / 3.0));
  out.passes = out.gamma_star >= floor_value;
  return out;
}

double svrg_tau_bound(double l_smooth, std::int64_t n_t, double f_gap, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (n_t < 1) throw std::invalid_argument("training size must be positive");
  if (f_gap < 0.0) throw std::invalid_argument("objective gap must be nonnegative");
  return 1.0 + 40.0 * l_smooth * std::pow(static_cast<double>(n_t), 2.0 / 3.0) * f_gap / epsilon;
}

double svrg_ifo_bound(double tau_bound, std::int64_t n_t, std::int64_t m) {
  if (!(tau_bound >= 1.0)) throw std::invalid_argument("epoch bound must be at least 1");
  if (n_t < 1 || m < 1) throw std::invalid_argument("sizes must be positive");
  return tau_bound * (static_cast<double>(n_t) + 2.0 * static_cast<double>(m));
}

}  // namespace earlystop
