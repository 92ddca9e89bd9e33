#include "earlystop/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "earlystop/stats.hpp"

namespace earlystop {

namespace {

using nlohmann::json;

// Setup draws (dataset materialization, variance probes) use a reserved
// trial index so they never collide with trial streams.
constexpr std::uint64_t kSetupTrial = 0xFFFFFFFFFFFFFFFFULL;

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "sgd") return Algorithm::sgd;
  if (name == "dsgd") return Algorithm::dsgd;
  if (name == "svrg") return Algorithm::svrg;
  throw std::runtime_error("config: unknown algorithm '" + name + "'");
}

EmpiricalMeasure measure_from_json(const json& j) {
  if (j.contains("csv")) return EmpiricalMeasure::load_csv(j.at("csv").get<std::string>());
  std::vector<Eigen::VectorXd> points;
  for (const auto& row : j.at("points")) {
    Eigen::VectorXd p(row.size());
    Eigen::Index k = 0;
    for (const auto& v : row) p[k++] = v.get<double>();
    points.push_back(std::move(p));
  }
  if (j.contains("weights")) {
    std::vector<double> weights = j.at("weights").get<std::vector<double>>();
    return EmpiricalMeasure(std::move(points), std::move(weights));
  }
  return EmpiricalMeasure::uniform(std::move(points));
}

BiasSpec bias_from_json(const json& j) {
  BiasSpec spec;
  const std::string type = j.value("type", "zero");
  if (type == "zero" || type == "none") {
    spec.kind = BiasSpec::Kind::none;
    return spec;
  }
  if (type != "ar1") throw std::runtime_error("config: unknown bias type '" + type + "'");
  spec.kind = BiasSpec::Kind::ar1;
  spec.alpha = j.at("alpha").get<double>();
  if (j.contains("R")) {
    spec.rate_r = j.at("R").get<double>();
  } else {
    spec.beta = j.at("beta").get<double>();
  }
  return spec;
}

TopologySpec topology_from_json(const json& j) {
  TopologySpec spec;
  if (j.contains("csv")) {
    spec.csv = j.at("csv").get<std::string>();
    return spec;
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "complete") {
    spec.kind = Topology::complete;
  } else if (kind == "ring") {
    spec.kind = Topology::ring;
  } else if (kind == "star") {
    spec.kind = Topology::star;
  } else {
    throw std::runtime_error("config: unknown topology '" + kind + "'");
  }
  spec.m_nodes = j.at("M").get<int>();
  spec.self_weight = j.value("self_weight", 0.5);
  return spec;
}

BoundReport invalid_report(const std::string& name, const std::string& why) {
  BoundReport r;
  r.name = name;
  r.valid = false;
  r.condition = why;
  return r;
}

std::uint64_t cap_from_bound(double bound, std::int64_t m) {
  double cap = 1e6;
  if (std::isfinite(bound) && bound >= 1.0) cap = std::min(1e15, std::ceil(100.0 * bound));
  const auto floor_cap = static_cast<std::uint64_t>(2 * m + 2);
  return std::max(static_cast<std::uint64_t>(cap), floor_cap);
}

json summary_to_json(const TrialSummary& s) {
  json j;
  j["algorithm"] = s.algorithm;
  j["problem"] = s.problem;
  j["trials"] = s.trials;
  j["cap_hits"] = s.cap_hits;
  j["mean_tau"] = s.mean_tau;
  j["ci95_tau"] = s.ci95_tau ? json(*s.ci95_tau) : json(nullptr);
  j["mean_ifo"] = s.mean_ifo;
  j["ci95_ifo"] = s.ci95_ifo ? json(*s.ci95_ifo) : json(nullptr);
  j["bound_tau"] = std::isfinite(s.bound_tau) ? json(s.bound_tau) : json(nullptr);
  j["bound_ifo"] = std::isfinite(s.bound_ifo) ? json(s.bound_ifo) : json(nullptr);
  j["bound_valid"] = s.bound_valid;
  j["pass"] = s.pass;
  return j;
}

TrialSummary summary_from_json(const json& j) {
  TrialSummary s;
  s.algorithm = j.at("algorithm").get<std::string>();
  s.problem = j.at("problem").get<std::string>();
  s.trials = j.at("trials").get<std::size_t>();
  s.cap_hits = j.at("cap_hits").get<std::size_t>();
  s.mean_tau = j.at("mean_tau").get<double>();
  if (!j.at("ci95_tau").is_null()) s.ci95_tau = j.at("ci95_tau").get<double>();
  s.mean_ifo = j.at("mean_ifo").get<double>();
  if (!j.at("ci95_ifo").is_null()) s.ci95_ifo = j.at("ci95_ifo").get<double>();
  s.bound_tau = j.at("bound_tau").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : j.at("bound_tau").get<double>();
  s.bound_ifo = j.at("bound_ifo").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : j.at("bound_ifo").get<double>();
  s.bound_valid = j.at("bound_valid").get<bool>();
  s.pass = j.at("pass").get<bool>();
  return s;
}

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::sgd: return "sgd";
    case Algorithm::dsgd: return "dsgd";
    case Algorithm::svrg: return "svrg";
  }
  return "unknown";
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
  cfg.problem = j.value("problem", "quadratic");
  cfg.dimension = j.at("dimension").get<int>();
  if (cfg.dimension < 1) throw std::runtime_error("config: dimension must be positive");
  cfg.radius_j = j.value("radius_j", 1.0);

  if (j.contains("test_distribution")) cfg.test_distribution = measure_from_json(j.at("test_distribution"));
  if (j.contains("dataset_T")) cfg.dataset_t_csv = j.at("dataset_T").get<std::string>();
  if (j.contains("dataset_V")) cfg.dataset_v_csv = j.at("dataset_V").get<std::string>();
  cfg.n_t = j.value("n_T", 1);
  cfg.n_v = j.value("n_V", cfg.n_t);

  if (j.contains("x1")) {
    const json& x = j.at("x1");
    if (x.is_array()) {
      Eigen::VectorXd v(x.size());
      Eigen::Index k = 0;
      for (const auto& e : x) v[k++] = e.get<double>();
      cfg.x1 = std::move(v);
    } else if (x.is_object() && x.contains("fill")) {
      cfg.x1 = Eigen::VectorXd::Constant(cfg.dimension, x.at("fill").get<double>());
    } else {
      throw std::runtime_error("config: x1 must be an array or {\"fill\": value}");
    }
  }

  cfg.epsilon = j.at("epsilon").get<double>();
  if (j.contains("m")) cfg.m = j.at("m").get<std::int64_t>();
  if (j.contains("c")) cfg.c = j.at("c").get<double>();
  if (j.contains("eta")) cfg.eta = j.at("eta").get<double>();
  if (j.contains("max_iters")) cfg.max_iters = j.at("max_iters").get<std::uint64_t>();
  if (j.contains("bias")) cfg.bias = bias_from_json(j.at("bias"));
  if (j.contains("topology")) cfg.topology = topology_from_json(j.at("topology"));
  if (j.contains("sigma2")) cfg.sigma2_override = j.at("sigma2").get<double>();
  cfg.trials = j.value("trials", 1);
  cfg.master_seed = j.value("seed", 0ULL);
  cfg.record_dispersion = j.value("record_dispersion", false);
  cfg.record_inner_limit = j.value("record_inner_states", 0);
  if (j.contains("n_T_values")) cfg.n_t_values = j.at("n_T_values").get<std::vector<std::size_t>>();
  if (j.contains("kappa_d")) cfg.kappa_d = j.at("kappa_d").get<double>();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

Experiment build_experiment(const ExperimentConfig& config) {
  Experiment ex;
  ex.algorithm = config.algorithm;
  ex.problem_name = config.problem;
  ex.bias = config.bias;
  ex.record_dispersion = config.record_dispersion;

  // Datasets: explicit CSVs win; otherwise sample once from the test
  // distribution with the reserved setup streams.
  std::optional<EmpiricalMeasure> data_t, data_v;
  if (config.dataset_t_csv) data_t = EmpiricalMeasure::load_csv(*config.dataset_t_csv);
  if (config.dataset_v_csv) data_v = EmpiricalMeasure::load_csv(*config.dataset_v_csv);
  if (!data_t) {
    if (!config.test_distribution)
      throw std::runtime_error("config: needs dataset_T or a test_distribution to sample from");
    const TrialRng setup(config.master_seed, kSetupTrial);
    RngStream train_stream = setup.stream(kTrainSampleNode);
    data_t = sample_empirical(*config.test_distribution, config.n_t, train_stream);
    if (!data_v && config.algorithm != Algorithm::svrg) {
      RngStream val_stream = setup.stream(kValSampleNode);
      data_v = sample_empirical(*config.test_distribution, config.n_v, val_stream);
    }
  }
  if (!data_v) data_v = *data_t;  // svrg checks the training gradient
  ex.data_t = std::move(*data_t);
  ex.data_v = std::move(*data_v);

  if (ex.data_t.dimension() != config.dimension || ex.data_v.dimension() != config.dimension)
    throw std::runtime_error("config: dataset dimension does not match 'dimension'");

  if (config.problem == "quadratic") {
    ex.loss = quadratic_problem();
  } else if (config.problem == "tanh_composite") {
    const EmpiricalMeasure& targets =
        config.test_distribution ? *config.test_distribution : ex.data_t;
    ex.loss = tanh_composite_problem(targets, config.radius_j);
  } else {
    throw std::runtime_error("config: unknown problem '" + config.problem + "'");
  }

  ex.x1 = config.x1 ? *config.x1 : Eigen::VectorXd::Ones(config.dimension);
  if (ex.x1.size() != config.dimension)
    throw std::runtime_error("config: x1 dimension does not match 'dimension'");

  const double l_smooth = ex.loss.smoothness_l;
  const double g_lip = ex.loss.data_lipschitz_g;
  const auto n_t = static_cast<std::int64_t>(ex.data_t.size());
  const auto n_v = static_cast<std::int64_t>(ex.data_v.size());

  // Variance certificate: empirical bound over the initial point plus a few
  // scattered probes, with a 1.1 safety factor, unless overridden.
  if (config.sigma2_override) {
    ex.sigma2 = *config.sigma2_override;
  } else {
    const TrialRng setup(config.master_seed, kSetupTrial);
    RngStream probe_stream = setup.stream(kProbeNode);
    std::vector<Eigen::VectorXd> probes{ex.x1};
    for (int k = 0; k < 16; ++k) probes.push_back(ex.x1 + probe_stream.gaussian_vector(ex.x1.size()));
    FiniteSumObjective probe_obj(ex.loss, ex.data_t);
    ex.sigma2 = 1.1 * probe_obj.empirical_variance_bound(probes);
  }

  ex.d1 = wasserstein(ex.data_v, ex.data_t, 1.0);
  ex.f_gap = mean_value(ex.loss, ex.data_t, ex.x1) - ex.loss.lower_bound;

  const std::int64_t m = config.m.value_or(config.algorithm == Algorithm::svrg
                                               ? svrg_hyperparams(n_t, l_smooth).m
                                               : 1);

  switch (config.algorithm) {
    case Algorithm::sgd: {
      ex.c = config.c.value_or(0.5);
      double eta;
      if (config.eta) {
        eta = *config.eta;
      } else {
        if (config.bias.kind == BiasSpec::Kind::ar1 && !config.bias.rate_r)
          throw std::runtime_error(
              "config: an absolute bias level needs an explicit eta (the coupled step size "
              "expects beta = eta * R)");
        const double rate = config.bias.rate_r.value_or(0.0);
        eta = sgd_step_size(ex.c, l_smooth, config.epsilon, m, g_lip, ex.d1, ex.sigma2, rate,
                            config.bias.alpha);
      }
      ex.sgd_config = {eta, m, config.epsilon, 0};

      SgdBoundParams p;
      p.l_smooth = l_smooth;
      p.eta = eta;
      p.m = m;
      p.epsilon = config.epsilon;
      p.sigma2 = ex.sigma2;
      p.alpha = config.bias.kind == BiasSpec::Kind::ar1 ? config.bias.alpha : 0.0;
      p.beta = config.bias.kind == BiasSpec::Kind::ar1 ? config.bias.resolved_beta(eta) : 0.0;
      p.g_lip = g_lip;
      p.d1 = ex.d1;
      p.f_gap = ex.f_gap;
      try {
        ex.bounds.push_back(sgd_tau_bound(p));
      } catch (const std::exception& e) {
        ex.bounds.push_back(invalid_report("sgd_tau_bound", e.what()));
      }

      CoupledBoundParams cp;
      cp.c = ex.c;
      cp.l_smooth = l_smooth;
      cp.m = m;
      cp.epsilon = config.epsilon;
      cp.sigma2 = ex.sigma2;
      cp.rate_r = config.bias.kind == BiasSpec::Kind::ar1
                      ? (config.bias.rate_r ? *config.bias.rate_r
                                            : config.bias.resolved_beta(eta) / eta)
                      : 0.0;
      cp.alpha = p.alpha;
      cp.g_lip = g_lip;
      cp.d1 = ex.d1;
      cp.f_gap = ex.f_gap;
      try {
        ex.bounds.push_back(sgd_tau_bound_coupled(cp));
      } catch (const std::exception& e) {
        ex.bounds.push_back(invalid_report("sgd_tau_bound_coupled", e.what()));
      }

      for (const BoundReport& r : ex.bounds) {
        if (r.valid) {
          ex.tau_bound = r.value;
          ex.tau_bound_valid = true;
          ex.ifo_bound = sgd_ifo_bound(r.value, m, n_v);
          break;
        }
      }
      ex.sgd_config.max_iters = config.max_iters.value_or(
          cap_from_bound(ex.tau_bound_valid ? ex.tau_bound : std::nan(""), m));
      break;
    }
    case Algorithm::dsgd: {
      if (!config.topology) throw std::runtime_error("config: dsgd needs a topology");
      if (config.topology->csv) {
        ex.connectivity = ConnectivityMatrix::load_csv(*config.topology->csv);
      } else {
        ex.connectivity =
            make_topology(config.topology->kind, config.topology->m_nodes,
                          config.topology->self_weight);
      }
      const double rho = ex.connectivity->rho();
      ex.c = config.c.value_or((1.0 - std::sqrt(rho)) / (4.0 * std::sqrt(2.0)));
      const double eta =
          config.eta ? *config.eta
                     : dsgd_step_size(ex.c, l_smooth, config.epsilon, m, g_lip, ex.d1, ex.sigma2,
                                      rho);
      ex.sgd_config = {eta, m, config.epsilon, 0};

      DsgdBoundParams p;
      p.c = ex.c;
      p.l_smooth = l_smooth;
      p.m = m;
      p.epsilon = config.epsilon;
      p.sigma2 = ex.sigma2;
      p.rho = rho;
      p.g_lip = g_lip;
      p.d1 = ex.d1;
      p.f_gap = ex.f_gap;
      try {
        ex.bounds.push_back(dsgd_tau_bound(p));
      } catch (const std::exception& e) {
        ex.bounds.push_back(invalid_report("dsgd_tau_bound", e.what()));
      }
      if (ex.bounds.back().valid) {
        ex.tau_bound = ex.bounds.back().value;
        ex.tau_bound_valid = true;
        ex.ifo_bound = dsgd_ifo_bound(ex.tau_bound, m, n_v, ex.connectivity->nodes());
      }
      ex.sgd_config.max_iters = config.max_iters.value_or(
          cap_from_bound(ex.tau_bound_valid ? ex.tau_bound : std::nan(""), m));
      break;
    }
    case Algorithm::svrg: {
      const SvrgHyperparams h = svrg_hyperparams(n_t, l_smooth);
      ex.svrg_config.eta = config.eta.value_or(h.eta);
      ex.svrg_config.m = m;
      ex.svrg_config.epsilon = config.epsilon;
      ex.svrg_config.record_inner_limit = config.record_inner_limit;

      const double bound = svrg_tau_bound(l_smooth, n_t, ex.f_gap, config.epsilon);
      BoundReport r;
      r.name = "svrg_tau_bound";
      r.valid = true;
      r.value = bound;
      r.condition = "epsilon > 0";
      r.params = {{"L", l_smooth},
                  {"n_T", static_cast<double>(n_t)},
                  {"f_gap", ex.f_gap},
                  {"epsilon", config.epsilon}};
      ex.bounds.push_back(r);
      ex.tau_bound = bound;
      ex.tau_bound_valid = true;
      ex.ifo_bound = svrg_ifo_bound(bound, n_t, ex.svrg_config.m);

      const GammaSearch gs = gamma_lower_bound_check(n_t, l_smooth);
      BoundReport gr;
      gr.name = "svrg_gamma_floor";
      gr.valid = gs.passes;
      gr.value = gs.gamma_star;
      gr.condition = "gamma_star >= 1 / (40 L n^(2/3))";
      gr.params = {{"beta_star", gs.beta_star},
                   {"floor", 1.0 / (40.0 * l_smooth *
                                    std::pow(static_cast<double>(n_t), 2.0 / 3.0))}};
      ex.bounds.push_back(gr);

      ex.svrg_config.max_epochs =
          config.max_iters.value_or(cap_from_bound(bound, 1));
      break;
    }
  }

  // Post-stationarity and IFO reports shared by the validation-checked runs.
  if (config.algorithm != Algorithm::svrg) {
    BoundReport r;
    r.name = "post_stationarity_bound";
    r.valid = true;
    r.value = post_stationarity_bound(config.epsilon, g_lip, ex.d1);
    r.condition = "normal termination";
    r.params = {{"epsilon", config.epsilon}, {"G", g_lip}, {"d1", ex.d1}};
    ex.bounds.push_back(r);
  }
  if (ex.tau_bound_valid) {
    BoundReport r;
    r.name = algorithm_name(config.algorithm) + "_ifo_bound";
    r.valid = true;
    r.value = ex.ifo_bound;
    r.condition = "from the stopping-time bound";
    r.params = {{"tau_bound", ex.tau_bound}};
    ex.bounds.push_back(r);
  }

  // Population bounds when a finite-support test distribution is declared.
  if (config.test_distribution) {
    const auto m_support = static_cast<std::int64_t>(config.test_distribution->size());
    BoundReport r;
    r.name = "generalization_bound_discrete";
    r.valid = true;
    r.value = generalization_bound_discrete(config.epsilon, g_lip, m_support, n_t);
    r.condition = "finite-support test distribution";
    r.params = {{"epsilon", config.epsilon},
                {"G", g_lip},
                {"m_support", static_cast<double>(m_support)},
                {"n_T", static_cast<double>(n_t)}};
    ex.bounds.push_back(r);
    if (config.kappa_d && config.dimension >= 3) {
      const double j_moment = third_moment(*config.test_distribution);
      BoundReport rc;
      rc.name = "generalization_bound_continuous";
      rc.valid = true;
      rc.value = generalization_bound_continuous(config.epsilon, g_lip, *config.kappa_d, j_moment,
                                                 n_t, config.dimension);
      rc.condition = "d >= 3 with user-supplied kappa_d";
      rc.params = {{"kappa_d", *config.kappa_d}, {"J", j_moment}};
      ex.bounds.push_back(rc);
    }
  }

  return ex;
}

RunRecord run_trial(const Experiment& ex, std::uint64_t master_seed, std::uint64_t trial_index) {
  const TrialRng rng(master_seed, trial_index);
  switch (ex.algorithm) {
    case Algorithm::sgd:
      return run_sgd(FiniteSumObjective(ex.loss, ex.data_t), FiniteSumObjective(ex.loss, ex.data_v),
                     ex.x1, ex.sgd_config, ex.bias, rng);
    case Algorithm::dsgd:
      return run_dsgd(FiniteSumObjective(ex.loss, ex.data_t),
                      FiniteSumObjective(ex.loss, ex.data_v), ex.x1, *ex.connectivity,
                      ex.sgd_config, rng, ex.record_dispersion);
    case Algorithm::svrg:
      return run_svrg(FiniteSumObjective(ex.loss, ex.data_t), ex.x1, ex.svrg_config, rng);
  }
  throw std::logic_error("unhandled algorithm");
}

std::vector<RunRecord> run_trials(const Experiment& ex, std::uint64_t master_seed,
                                  std::size_t trials) {
  if (trials < 1) throw std::invalid_argument("at least one trial is required");
  std::vector<RunRecord> records;
  records.reserve(trials);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    try {
      records.push_back(run_trial(ex, master_seed, trial));
    } catch (const std::exception& e) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%llu",
                    static_cast<unsigned long long>(TrialRng(master_seed, trial).trial_seed()));
      throw std::runtime_error("trial " + std::to_string(trial) + " (seed " + buf +
                               ") failed: " + e.what());
    }
  }
  return records;
}

AlgorithmRunner experiment_runner(const Experiment& ex) {
  return [&ex](FiniteSumObjective train, FiniteSumObjective validation,
               const TrialRng& rng) -> RunRecord {
    switch (ex.algorithm) {
      case Algorithm::sgd:
        return run_sgd(std::move(train), std::move(validation), ex.x1, ex.sgd_config, ex.bias, rng);
      case Algorithm::dsgd:
        return run_dsgd(std::move(train), std::move(validation), ex.x1, *ex.connectivity,
                        ex.sgd_config, rng, false);
      case Algorithm::svrg:
        return run_svrg(std::move(train), ex.x1, ex.svrg_config, rng);
    }
    throw std::logic_error("unhandled algorithm");
  };
}

TrialSummary summarize_trials(const Experiment& ex, const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("no trials to summarize");
  TrialSummary s;
  s.algorithm = algorithm_name(ex.algorithm);
  s.problem = ex.problem_name;
  s.trials = records.size();
  RunningStat tau, ifo;
  for (const RunRecord& r : records) {
    if (r.cap_hit) ++s.cap_hits;
    tau.add(static_cast<double>(r.tau));
    ifo.add(static_cast<double>(r.ifo_count));
  }
  s.mean_tau = tau.mean();
  s.mean_ifo = ifo.mean();
  s.ci95_tau = tau.ci95();
  s.ci95_ifo = ifo.ci95();
  s.bound_tau = ex.tau_bound;
  s.bound_ifo = ex.ifo_bound;
  s.bound_valid = ex.tau_bound_valid;
  s.pass = s.bound_valid && s.cap_hits == 0 &&
           s.mean_tau + s.ci95_tau.value_or(0.0) <= s.bound_tau;
  return s;
}

TrialSummary estimate_expected_tau(const ExperimentConfig& config) {
  const Experiment ex = build_experiment(config);
  return summarize_trials(ex, run_trials(ex, config.master_seed, config.trials));
}

std::vector<GeneralizeRow> run_generalize(const ExperimentConfig& config) {
  if (!config.test_distribution)
    throw std::runtime_error("config: the generalization sweep needs a test_distribution");
  if (config.trials < 2) throw std::runtime_error("config: the sweep needs trials >= 2");
  std::vector<std::size_t> sizes = config.n_t_values;
  if (sizes.empty()) sizes.push_back(config.n_t);

  const TestDistribution dist(*config.test_distribution);
  std::vector<GeneralizeRow> rows;
  for (const std::size_t n_t : sizes) {
    ExperimentConfig variant = config;
    variant.n_t = n_t;
    variant.n_t_values.clear();
    const Experiment ex = build_experiment(variant);
    const std::uint64_t row_seed =
        mix64(config.master_seed + RngStream::kGolden * (static_cast<std::uint64_t>(n_t) + 1));
    const GapEstimate gap = mc_generalization_gap(dist, ex.loss, experiment_runner(ex), n_t,
                                                  config.n_v, config.trials, row_seed);
    GeneralizeRow row;
    row.n_t = n_t;
    row.n_v = config.n_v;
    row.trials = gap.trials;
    row.mean_grad_sq_g = gap.mean_grad_sq_g;
    row.ci95 = gap.ci95;
    row.bound_discrete = generalization_bound_discrete(
        config.epsilon, ex.loss.data_lipschitz_g,
        static_cast<std::int64_t>(dist.mu.size()), static_cast<std::int64_t>(n_t));
    if (config.kappa_d && config.dimension >= 3) {
      row.bound_continuous = generalization_bound_continuous(
          config.epsilon, ex.loss.data_lipschitz_g, *config.kappa_d, dist.third_moment_j,
          static_cast<std::int64_t>(n_t), config.dimension);
    }
    row.pass = row.mean_grad_sq_g <= row.bound_discrete + row.ci95;
    rows.push_back(row);
  }
  return rows;
}

std::string generalize_csv(const std::vector<GeneralizeRow>& rows) {
  std::string out = "n_T,n_V,trials,mean_grad_sq_G,ci95,bound_discrete,bound_continuous,pass\n";
  for (const GeneralizeRow& r : rows) {
    out += std::to_string(r.n_t) + "," + std::to_string(r.n_v) + "," + std::to_string(r.trials) +
           "," + format_double(r.mean_grad_sq_g) + "," + format_double(r.ci95) + "," +
           format_double(r.bound_discrete) + ",";
    out += r.bound_continuous ? format_double(*r.bound_continuous) : std::string("na");
    out += std::string(",") + (r.pass ? "true" : "false") + "\n";
  }
  return out;
}

StoppedSumStats stopped_sum_stats(std::size_t trials, std::uint64_t seed,
                                  const std::function<double(RngStream&)>& increment,
                                  const std::function<bool(std::uint64_t, double)>& stop_after) {
  if (trials < 1) throw std::invalid_argument("at least one trial is required");
  RunningStat stat;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RngStream stream = TrialRng(seed, trial).stream(0);
    double sum = 0.0;
    for (std::uint64_t t = 1;; ++t) {
      const double x = increment(stream);
      sum += x;
      if (stop_after(t, x)) break;
    }
    stat.add(sum);
  }
  StoppedSumStats out;
  out.mean = stat.mean();
  out.ci95 = stat.ci95();
  return out;
}

SelfTestResult optional_stopping_selftest(std::size_t trials, std::uint64_t seed) {
  if (trials < 100) throw std::invalid_argument("the self-test needs at least 100 trials");
  const StoppedSumStats stats = stopped_sum_stats(
      trials, seed, [](RngStream& s) { return (s.next_u64() & 1ULL) ? 1.0 : -1.0; },
      [](std::uint64_t t, double x) { return x == 1.0 || t >= 50; });
  SelfTestResult out;
  out.mean = stats.mean;
  out.ci95 = stats.ci95.value();
  out.pass = std::abs(out.mean) <= out.ci95;
  return out;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string report_csv(const std::vector<TrialSummary>& summaries) {
  if (summaries.empty()) throw std::invalid_argument("no summaries to report");
  std::string out =
      "algorithm,problem,trials,cap_hits,mean_tau,ci95_tau,mean_ifo,ci95_ifo,"
      "bound_tau,bound_ifo,bound_valid,pass\n";
  for (const TrialSummary& s : summaries) {
    out += s.algorithm + "," + s.problem + "," + std::to_string(s.trials) + "," +
           std::to_string(s.cap_hits) + "," + format_double(s.mean_tau) + ",";
    out += s.ci95_tau ? format_double(*s.ci95_tau) : std::string("na");
    out += "," + format_double(s.mean_ifo) + ",";
    out += s.ci95_ifo ? format_double(*s.ci95_ifo) : std::string("na");
    out += "," + format_double(s.bound_tau) + "," + format_double(s.bound_ifo) + ",";
    out += std::string(s.bound_valid ? "true" : "false") + "," + (s.pass ? "true" : "false") + "\n";
  }
  return out;
}

std::string report_json(const std::vector<TrialSummary>& summaries) {
  if (summaries.empty()) throw std::invalid_argument("no summaries to report");
  json arr = json::array();
  for (const TrialSummary& s : summaries) arr.push_back(summary_to_json(s));
  return arr.dump(2) + "\n";
}

std::vector<TrialSummary> report_from_json(const std::string& text) {
  const json arr = json::parse(text);
  std::vector<TrialSummary> out;
  for (const auto& j : arr) out.push_back(summary_from_json(j));
  return out;
}

std::string run_record_json_line(const RunRecord& record, std::uint64_t trial,
                                 std::uint64_t trial_seed) {
  json j;
  j["trial"] = trial;
  j["seed"] = trial_seed;
  j["tau"] = record.tau;
  j["cap_hit"] = record.cap_hit;
  j["ifo"] = record.ifo_count;
  j["final_grad_sq_V"] = record.final_grad_sq_v;
  j["final_grad_sq_T"] = record.final_grad_sq_t;
  j["checks"] = record.check_values.size();
  j["final_x"] = std::vector<double>(record.final_x.data(),
                                     record.final_x.data() + record.final_x.size());
  return j.dump();
}

std::string run_records_csv(const std::vector<RunRecord>& records,
                            const std::vector<std::uint64_t>& trial_seeds) {
  if (records.size() != trial_seeds.size())
    throw std::invalid_argument("one seed per record is required");
  std::string out = "seed,tau,ifo,final_grad_norm_sq_V,final_grad_norm_sq_T\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += std::to_string(trial_seeds[i]) + "," + std::to_string(records[i].tau) + "," +
           std::to_string(records[i].ifo_count) + "," +
           format_double(records[i].final_grad_sq_v) + "," +
           format_double(records[i].final_grad_sq_t) + "\n";
  }
  return out;
}

std::string bound_reports_json(const std::vector<BoundReport>& reports) {
  json arr = json::array();
  for (const BoundReport& r : reports) {
    json j;
    j["name"] = r.name;
    j["value"] = std::isfinite(r.value) ? json(r.value) : json(nullptr);
    j["valid"] = r.valid;
    j["condition"] = r.condition;
    j["params"] = r.params;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

std::string bound_reports_csv(const std::vector<BoundReport>& reports) {
  std::string out = "name,value,valid,condition\n";
  for (const BoundReport& r : reports) {
    out += r.name + "," + (std::isfinite(r.value) ? format_double(r.value) : std::string("na")) +
           "," + (r.valid ? "true" : "false") + ",\"" + r.condition + "\"\n";
  }
  return out;
}

}  // namespace earlystop
