#include "earlystop/sgd.hpp"

#include <cmath>
#include <stdexcept>

namespace earlystop {

namespace {

void check_sgd_config(const SgdConfig& c) {
  if (!(c.eta > 0.0)) throw std::invalid_argument("step size must be positive");
  if (c.m < 1) throw std::invalid_argument("epoch length must be at least 1");
  if (!(c.epsilon > 0.0)) throw std::invalid_argument("stopping threshold must be positive");
  if (c.max_iters < 1) throw std::invalid_argument("iteration cap must be positive");
}

// Stateful generator for the synthetic drift trail.
class BiasState {
 public:
  BiasState(const BiasSpec& spec, double eta, Eigen::Index dim)
      : kind_(spec.kind), alpha_(spec.alpha), beta_(spec.resolved_beta(eta)), dim_(dim) {
    if (kind_ == BiasSpec::Kind::ar1) {
      if (!(alpha_ >= 0.0 && alpha_ < 1.0))
        throw std::invalid_argument("drift contraction alpha must lie in [0, 1)");
      if (beta_ < 0.0) throw std::invalid_argument("drift level beta must be nonnegative");
    }
  }

  double alpha() const { return kind_ == BiasSpec::Kind::ar1 ? alpha_ : 0.0; }
  double beta() const { return kind_ == BiasSpec::Kind::ar1 ? beta_ : 0.0; }

  // Produces Delta_t and appends the certified (V_t, U_t) pair.
  Eigen::VectorXd step(RngStream& noise, std::vector<DriftStep>& audit) {
    if (kind_ == BiasSpec::Kind::none) {
      audit.push_back({0.0, 0.0, 0.0});
      return Eigen::VectorXd::Zero(dim_);
    }
    const double v = first_ ? beta_ : alpha_ * prev_v_ + prev_u_;
    first_ = false;
    const double u = 2.0 * beta_ * noise.next_double();
    prev_v_ = v;
    prev_u_ = u;
    const Eigen::VectorXd delta = std::sqrt(v) * noise.unit_vector(dim_);
    audit.push_back({v, u, delta.squaredNorm()});
    return delta;
  }

 private:
  BiasSpec::Kind kind_;
  double alpha_, beta_;
  Eigen::Index dim_;
  bool first_ = true;
  double prev_v_ = 0.0, prev_u_ = 0.0;
};

}  // namespace

RunRecord run_sgd(FiniteSumObjective obj_t, FiniteSumObjective obj_v, const Eigen::VectorXd& x1,
                  const SgdConfig& config, const BiasSpec& bias, const TrialRng& rng) {
  check_sgd_config(config);
  if (obj_t.dataset().dimension() != obj_v.dataset().dimension())
    throw std::invalid_argument("training and validation data dimensions differ");

  RngStream grad_stream = rng.stream(1);
  RngStream bias_stream = rng.stream(0);
  BiasState drift(bias, config.eta, x1.size());

  RunRecord record;
  record.drift_alpha = drift.alpha();
  record.drift_beta = drift.beta();

  Eigen::VectorXd x = x1;
  std::uint64_t t = 1;
  while (true) {
    const double check = obj_v.gradient(x).squaredNorm();
    record.check_values.push_back(check);
    if (check <= config.epsilon) {
      record.tau = t;
      record.final_grad_sq_v = check;
      break;
    }
    if (t + static_cast<std::uint64_t>(config.m) > config.max_iters) {
      record.tau = t;
      record.cap_hit = true;
      record.final_grad_sq_v = check;
      break;
    }
    for (std::int64_t k = 0; k < config.m; ++k) {
      const Eigen::VectorXd v = obj_t.stochastic_gradient(x, grad_stream);
      const Eigen::VectorXd delta = drift.step(bias_stream, record.drift_audit);
      x -= config.eta * (v + delta);
    }
    t += static_cast<std::uint64_t>(config.m);
  }

  record.final_x = x;
  record.final_grad_sq_t = mean_gradient(obj_t.loss(), obj_t.dataset(), x).squaredNorm();
  record.ifo_count = obj_t.ifo_count() + obj_v.ifo_count();
  return record;
}

double sgd_step_size(double c, double l_smooth, double epsilon, std::int64_t m, double g_lip,
                     double d1, double sigma2, double rate_r, double alpha) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("c must lie in (0, 1)");
  if (!(l_smooth > 0.0)) throw std::invalid_argument("smoothness constant must be positive");
  if (m < 1) throw std::invalid_argument("epoch length must be at least 1");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
  if (sigma2 < 0.0 || rate_r < 0.0)
    throw std::invalid_argument("variance and drift levels must be nonnegative");
  const double gap = epsilon / 2.0 - g_lip * g_lip * d1 * d1;
  if (!(gap > 0.0))
    throw std::invalid_argument(
        "threshold below the irreducible validation-training gap: need epsilon > 2 G^2 d1^2");
  const double noise = 2.0 * l_smooth * sigma2 + 2.0 * rate_r / (1.0 - alpha);
  if (noise == 0.0) return c / l_smooth;
  return c * std::min(1.0 / l_smooth, gap / (static_cast<double>(m) * noise));
}

BoundReport sgd_tau_bound(const SgdBoundParams& p) {
  if (!(p.eta > 0.0) || p.eta > 1.0 / p.l_smooth)
    throw std::invalid_argument("the stopping-time bound requires 0 < eta <= 1/L");
  if (!(p.alpha >= 0.0 && p.alpha < 1.0))
    throw std::invalid_argument("alpha must lie in [0, 1)");
  if (p.m < 1) throw std::invalid_argument("epoch length must be at least 1");

  const double a = p.g_lip * p.g_lip * p.d1 * p.d1;
  const double drift = p.beta / (1.0 - p.alpha);
  const double md = static_cast<double>(p.m);

  BoundReport report;
  report.name = "sgd_tau_bound";
  report.condition = "epsilon - 4 L m eta sigma2 - 4 m beta/(1-alpha) - 2 G^2 d1^2 > 0";
  report.params = {{"L", p.l_smooth}, {"eta", p.eta},     {"m", md},
                   {"epsilon", p.epsilon}, {"sigma2", p.sigma2}, {"alpha", p.alpha},
                   {"beta", p.beta}, {"G", p.g_lip},      {"d1", p.d1},
                   {"f_gap", p.f_gap}};

  const double margin =
      p.epsilon - 4.0 * p.l_smooth * md * p.eta * p.sigma2 - 4.0 * md * drift - 2.0 * a;
  report.params["validity_margin"] = margin;
  if (!(margin > 0.0)) {
    report.valid = false;
    return report;
  }
  const double numerator = a + 2.0 * p.f_gap / p.eta + p.epsilon + 2.0 * drift;
  const double denominator =
      p.epsilon / (2.0 * md) - 2.0 * p.l_smooth * p.eta * p.sigma2 - 2.0 * drift - a / md;
  report.valid = true;
  report.value = numerator / denominator;
  return report;
}

BoundReport sgd_tau_bound_coupled(const CoupledBoundParams& p) {
  if (!(p.c > 0.0 && p.c < 1.0)) throw std::invalid_argument("c must lie in (0, 1)");
  if (!(p.alpha >= 0.0 && p.alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
  if (p.m < 1) throw std::invalid_argument("epoch length must be at least 1");
  const double a = p.g_lip * p.g_lip * p.d1 * p.d1;
  const double gap = p.epsilon / 2.0 - a;
  if (!(gap > 0.0))
    throw std::invalid_argument(
        "threshold below the irreducible validation-training gap: need epsilon > 2 G^2 d1^2");

  const double md = static_cast<double>(p.m);
  const double cc = (1.0 - p.c) * p.c;
  const double noise = p.l_smooth * p.sigma2 + p.rate_r / (1.0 - p.alpha);
  const double value = 4.0 * md * md * p.f_gap * noise / (cc * gap * gap) +
                       (2.0 * p.l_smooth * md * p.f_gap + md * p.c * a + p.c * p.epsilon / 2.0) /
                           (cc * gap) +
                       p.c / (1.0 - p.c);

  BoundReport report;
  report.name = "sgd_tau_bound_coupled";
  report.condition = "epsilon > 2 G^2 d1^2 and c in (0, 1)";
  report.valid = true;
  report.value = value;
  report.params = {{"c", p.c},       {"L", p.l_smooth}, {"m", md},
                   {"epsilon", p.epsilon}, {"sigma2", p.sigma2},  {"R", p.rate_r},
                   {"alpha", p.alpha},     {"G", p.g_lip},    {"d1", p.d1},
                   {"f_gap", p.f_gap}};
  return report;
}

double post_stationarity_bound(double epsilon, double g_lip, double d1) {
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
  const double root = std::sqrt(epsilon) + g_lip * d1;
  return root * root;
}

double sgd_ifo_bound(double tau_bound, std::int64_t m, std::int64_t n_v) {
  if (!(tau_bound >= 1.0)) throw std::invalid_argument("stopping-time bound must be at least 1");
  if (m < 1) throw std::invalid_argument("epoch length must be at least 1");
  if (n_v < 0) throw std::invalid_argument("validation size must be nonnegative");
  return tau_bound * (static_cast<double>(n_v) / static_cast<double>(m) + 1.0) +
         static_cast<double>(n_v);
}

}  // namespace earlystop
