#include "earlystop/dsgd.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace earlystop {

namespace {

constexpr double kMatrixTol = 1e-12;

void check_connectivity_shape(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() < 1)
    throw std::invalid_argument("connectivity matrix must be square and nonempty");
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) < 0.0) throw std::invalid_argument("connectivity entries must be nonnegative");
      if (std::abs(a(i, j) - a(j, i)) > kMatrixTol)
        throw std::invalid_argument("connectivity matrix must be symmetric");
      row += a(i, j);
    }
    if (std::abs(row - 1.0) > kMatrixTol)
      throw std::invalid_argument("connectivity rows must sum to 1");
  }
}

}  // namespace

double diffusion_coefficient(const Eigen::MatrixXd& a) {
  check_connectivity_shape(a);
  if (a.rows() == 1) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition of the connectivity matrix failed");
  // Ascending from the solver; nonincreasing order drops the last entry.
  const Eigen::VectorXd ev = solver.eigenvalues();
  double worst = 0.0;
  for (Eigen::Index k = 0; k + 1 < ev.size(); ++k) worst = std::max(worst, std::abs(ev[k]));
  return worst * worst;
}

ConnectivityMatrix::ConnectivityMatrix(Eigen::MatrixXd a)
    : a_(std::move(a)), rho_(diffusion_coefficient(a_)) {}

ConnectivityMatrix ConnectivityMatrix::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open connectivity CSV: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("connectivity CSV is empty: " + path);
  Eigen::MatrixXd a(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw std::runtime_error("connectivity CSV has ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return ConnectivityMatrix(std::move(a));
}

ConnectivityMatrix make_topology(Topology kind, int m_nodes, double self_weight) {
  if (m_nodes < 1) throw std::invalid_argument("node count must be positive");
  const Eigen::Index m = m_nodes;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  switch (kind) {
    case Topology::complete:
      a.setConstant(1.0 / static_cast<double>(m));
      break;
    case Topology::ring: {
      if (!(self_weight >= 0.0 && self_weight <= 1.0))
        throw std::invalid_argument("ring self weight must lie in [0, 1]");
      if (m == 1) {
        a(0, 0) = 1.0;
        break;
      }
      const double side = (1.0 - self_weight) / 2.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        a(i, i) = self_weight;
        a(i, (i + 1) % m) += side;
        a(i, (i + m - 1) % m) += side;
      }
      break;
    }
    case Topology::star: {
      if (!(self_weight >= 0.0 && self_weight <= 1.0))
        throw std::invalid_argument("star self weight must lie in [0, 1]");
      if (m == 1) {
        a(0, 0) = 1.0;
        break;
      }
      const double spoke = 1.0 - self_weight;  // spoke <-> hub weight
      const double hub_self = 1.0 - static_cast<double>(m - 1) * spoke;
      if (hub_self < 0.0)
        throw std::invalid_argument(
            "star self weight too small: the hub row would leave stochasticity");
      a(0, 0) = hub_self;
      for (Eigen::Index i = 1; i < m; ++i) {
        a(0, i) = spoke;
        a(i, 0) = spoke;
        a(i, i) = self_weight;
      }
      break;
    }
  }
  return ConnectivityMatrix(std::move(a));
}

Dispersion dispersion_quantities(const std::vector<Eigen::VectorXd>& node_states,
                                 const std::vector<Eigen::VectorXd>& node_stoch_grads,
                                 const std::vector<Eigen::VectorXd>& node_exact_grads,
                                 const ConnectivityMatrix& conn, double eta, double l_smooth) {
  const std::size_t m = node_states.size();
  if (m == 0 || node_stoch_grads.size() != m || node_exact_grads.size() != m)
    throw std::invalid_argument("dispersion inputs must have one entry per node");
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(node_states.front().size());
  for (const auto& x : node_states) xbar += x;
  xbar /= static_cast<double>(m);

  double spread = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    spread += (node_states[i] - xbar).squaredNorm();
    noise += (node_stoch_grads[i] - node_exact_grads[i]).squaredNorm();
  }
  const double l2 = l_smooth * l_smooth;
  const double md = static_cast<double>(m);
  Dispersion out;
  out.v = l2 / md * spread;
  out.u = 32.0 * eta * eta * l2 / (md * (1.0 - std::sqrt(conn.rho()))) * noise;
  return out;
}

double dsgd_alpha(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  const double s = 3.0 + std::sqrt(rho);
  return s * s / 16.0;
}

double dsgd_beta(double eta, double l_smooth, double sigma2, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  return eta * 8.0 * l_smooth * sigma2 / (1.0 - std::sqrt(rho));
}

RunRecord run_dsgd(FiniteSumObjective obj_t, FiniteSumObjective obj_v, const Eigen::VectorXd& x1,
                   const ConnectivityMatrix& conn, const SgdConfig& config, const TrialRng& rng,
                   bool record_dispersion) {
  if (!(config.eta > 0.0)) throw std::invalid_argument("step size must be positive");
  if (config.m < 1) throw std::invalid_argument("epoch length must be at least 1");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("stopping threshold must be positive");
  if (!(conn.rho() < 1.0))
    throw std::invalid_argument("connectivity matrix does not mix: diffusion coefficient >= 1");
  if (obj_t.dataset().dimension() != obj_v.dataset().dimension())
    throw std::invalid_argument("training and validation data dimensions differ");

  const int m_nodes = conn.nodes();
  const Eigen::MatrixXd& a = conn.matrix();
  std::vector<RngStream> streams;
  streams.reserve(m_nodes);
  for (int i = 0; i < m_nodes; ++i) streams.push_back(rng.stream(static_cast<std::uint64_t>(i) + 1));

  std::vector<Eigen::VectorXd> xs(m_nodes, x1);
  const auto node_average = [&]() {
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(x1.size());
    for (const auto& x : xs) avg += x;
    return Eigen::VectorXd(avg / static_cast<double>(m_nodes));
  };

  RunRecord record;
  record.drift_alpha = dsgd_alpha(conn.rho());

  std::vector<Eigen::VectorXd> vs(m_nodes), next(m_nodes), exact(m_nodes);
  std::uint64_t t = 1;
  Eigen::VectorXd xbar = node_average();
  Eigen::VectorXd xbar_incremental = xbar;  // mixing is doubly stochastic, so
                                            // only the gradient term moves it
  while (true) {
    const double check = obj_v.gradient(xbar).squaredNorm();
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
      for (int i = 0; i < m_nodes; ++i) vs[i] = obj_t.stochastic_gradient(xs[i], streams[i]);
      if (record_dispersion) {
        for (int i = 0; i < m_nodes; ++i)
          exact[i] = mean_gradient(obj_t.loss(), obj_t.dataset(), xs[i]);
        const Dispersion d = dispersion_quantities(xs, vs, exact, conn, config.eta,
                                                   obj_t.loss().smoothness_l);
        record.dispersion_audit.push_back({d.v, d.u});
      }
      for (int i = 0; i < m_nodes; ++i) {
        next[i] = -config.eta * vs[i];
        for (int j = 0; j < m_nodes; ++j) next[i] += a(i, j) * xs[j];
      }
      xs.swap(next);
      if (record_dispersion) {
        Eigen::VectorXd mean_v = Eigen::VectorXd::Zero(x1.size());
        for (const auto& v : vs) mean_v += v;
        xbar_incremental -= config.eta / static_cast<double>(m_nodes) * mean_v;
        record.consensus_drift = std::max(
            record.consensus_drift,
            (node_average() - xbar_incremental).cwiseAbs().maxCoeff());
      }
    }
    t += static_cast<std::uint64_t>(config.m);
    xbar = node_average();
  }

  record.final_x = xbar;
  record.final_grad_sq_t = mean_gradient(obj_t.loss(), obj_t.dataset(), xbar).squaredNorm();
  record.ifo_count = obj_t.ifo_count() + obj_v.ifo_count();
  return record;
}

double dsgd_step_size(double c, double l_smooth, double epsilon, std::int64_t m, double g_lip,
                      double d1, double sigma2, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  const double sqrt_rho = std::sqrt(rho);
  const double c_max = (1.0 - sqrt_rho) / (4.0 * std::sqrt(2.0));
  if (!(c > 0.0) || c > c_max)
    throw std::invalid_argument("c too large: the mixing condition requires c <= (1-sqrt(rho))/(4 sqrt(2))");
  if (!(l_smooth > 0.0)) throw std::invalid_argument("smoothness constant must be positive");
  if (m < 1) throw std::invalid_argument("epoch length must be at least 1");
  if (sigma2 < 0.0) throw std::invalid_argument("variance level must be nonnegative");
  const double gap = epsilon / 2.0 - g_lip * g_lip * d1 * d1;
  if (!(gap > 0.0))
    throw std::invalid_argument(
        "threshold below the irreducible validation-training gap: need epsilon > 2 G^2 d1^2");
  if (sigma2 == 0.0) return c / l_smooth;
  const double mixing = 7.0 + 5.0 * rho + std::pow(rho, 1.5) - 13.0 * sqrt_rho;
  const double denom = 2.0 * static_cast<double>(m) * sigma2 * (1.0 + 128.0 / mixing);
  return c / l_smooth * std::min(1.0, gap / denom);
}

BoundReport dsgd_tau_bound(const DsgdBoundParams& p) {
  if (!(p.rho >= 0.0 && p.rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  const double sqrt_rho = std::sqrt(p.rho);
  const double c_max = (1.0 - sqrt_rho) / (4.0 * std::sqrt(2.0));
  if (!(p.c > 0.0) || p.c > c_max)
    throw std::invalid_argument("c too large: the mixing condition requires c <= (1-sqrt(rho))/(4 sqrt(2))");

  CoupledBoundParams coupled;
  coupled.c = p.c;
  coupled.l_smooth = p.l_smooth;
  coupled.m = p.m;
  coupled.epsilon = p.epsilon;
  coupled.sigma2 = p.sigma2;
  coupled.rate_r = 8.0 * p.l_smooth * p.sigma2 / (1.0 - sqrt_rho);
  coupled.alpha = dsgd_alpha(p.rho);
  coupled.g_lip = p.g_lip;
  coupled.d1 = p.d1;
  coupled.f_gap = p.f_gap;
  BoundReport report = sgd_tau_bound_coupled(coupled);
  report.name = "dsgd_tau_bound";
  report.condition = "epsilon > 2 G^2 d1^2 and c <= (1-sqrt(rho))/(4 sqrt(2))";
  report.params["rho"] = p.rho;

  // Looser variant with R/(1-alpha) replaced by 128 L sigma2 / (7 (1-sqrt(rho))^2).
  const double a = p.g_lip * p.g_lip * p.d1 * p.d1;
  const double gap = p.epsilon / 2.0 - a;
  const double md = static_cast<double>(p.m);
  const double cc = (1.0 - p.c) * p.c;
  const double loose_noise = p.l_smooth * p.sigma2 +
                             128.0 * p.l_smooth * p.sigma2 / (7.0 * (1.0 - sqrt_rho) * (1.0 - sqrt_rho));
  report.params["value_simplified"] =
      4.0 * md * md * p.f_gap * loose_noise / (cc * gap * gap) +
      (2.0 * p.l_smooth * md * p.f_gap + md * p.c * a + p.c * p.epsilon / 2.0) / (cc * gap) +
      p.c / (1.0 - p.c);
  return report;
}

double dsgd_ifo_bound(double tau_bound, std::int64_t m, std::int64_t n_v, int m_nodes) {
  if (!(tau_bound >= 1.0)) throw std::invalid_argument("stopping-time bound must be at least 1");
  if (m < 1) throw std::invalid_argument("epoch length must be at least 1");
  if (n_v < 0 || m_nodes < 1) throw std::invalid_argument("invalid sizes");
  return tau_bound * (static_cast<double>(n_v) / static_cast<double>(m) +
                      static_cast<double>(m_nodes)) +
         static_cast<double>(n_v);
}

}  // namespace earlystop
