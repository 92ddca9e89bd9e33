#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "earlystop/bound_report.hpp"
#include "earlystop/dsgd.hpp"
#include "earlystop/generalization.hpp"
#include "earlystop/measure.hpp"
#include "earlystop/problem.hpp"
#include "earlystop/rng.hpp"
#include "earlystop/run_record.hpp"
#include "earlystop/sgd.hpp"
#include "earlystop/svrg.hpp"

namespace earlystop {

enum class Algorithm { sgd, dsgd, svrg };

std::string algorithm_name(Algorithm a);

struct TopologySpec {
  Topology kind = Topology::complete;
  int m_nodes = 1;
  double self_weight = 0.5;
  std::optional<std::string> csv;  // when set, the matrix is loaded instead
};

// Declarative experiment description, usually parsed from JSON. Datasets are
// either loaded from CSV or sampled once from the test distribution with the
// reserved setup substreams, so a config plus master seed pins every byte of
// the output.
struct ExperimentConfig {
  Algorithm algorithm = Algorithm::sgd;
  std::string problem = "quadratic";
  int dimension = 1;
  double radius_j = 1.0;

  std::optional<EmpiricalMeasure> test_distribution;
  std::optional<std::string> dataset_t_csv;
  std::optional<std::string> dataset_v_csv;
  std::size_t n_t = 1;
  std::size_t n_v = 1;

  std::optional<Eigen::VectorXd> x1;  // defaults to the all-ones vector
  double epsilon = 1e-2;
  std::optional<std::int64_t> m;      // checks spacing (inner length for svrg)
  std::optional<double> c;            // coupled-step scale
  std::optional<double> eta;          // explicit step size override
  std::optional<std::uint64_t> max_iters;
  BiasSpec bias;
  std::optional<TopologySpec> topology;
  std::optional<double> sigma2_override;
  std::size_t trials = 1;
  std::uint64_t master_seed = 0;
  bool record_dispersion = false;
  std::size_t record_inner_limit = 0;

  // generalization-experiment extras
  std::vector<std::size_t> n_t_values;
  std::optional<double> kappa_d;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// Materialized experiment: problem instance, fixed datasets, certified
// constants, the step size in effect, and every applicable bound report.
struct Experiment {
  Algorithm algorithm = Algorithm::sgd;
  std::string problem_name;
  LossFunction loss;
  // Placeholder atoms until build_experiment() fills the real datasets.
  EmpiricalMeasure data_t = EmpiricalMeasure::dirac(Eigen::VectorXd::Zero(1));
  EmpiricalMeasure data_v = EmpiricalMeasure::dirac(Eigen::VectorXd::Zero(1));
  Eigen::VectorXd x1;

  double sigma2 = 0.0;  // variance certificate (or user override)
  double d1 = 0.0;      // exact 1-Wasserstein distance between the datasets
  double f_gap = 0.0;   // f_T(x1) - lower bound
  double c = 0.5;

  SgdConfig sgd_config;
  SvrgConfig svrg_config;
  BiasSpec bias;
  std::optional<ConnectivityMatrix> connectivity;
  bool record_dispersion = false;

  std::vector<BoundReport> bounds;
  double tau_bound = std::numeric_limits<double>::quiet_NaN();
  double ifo_bound = std::numeric_limits<double>::quiet_NaN();
  bool tau_bound_valid = false;
};

Experiment build_experiment(const ExperimentConfig& config);

// One seeded execution of the experiment's algorithm.
RunRecord run_trial(const Experiment& ex, std::uint64_t master_seed, std::uint64_t trial_index);

// All trials in index order; any trial failure aborts with the trial seed in
// the error message.
std::vector<RunRecord> run_trials(const Experiment& ex, std::uint64_t master_seed,
                                  std::size_t trials);

// A runner closure over the experiment's algorithm, for the generalization
// Monte Carlo driver.
AlgorithmRunner experiment_runner(const Experiment& ex);

struct TrialSummary {
  std::string algorithm;
  std::string problem;
  std::size_t trials = 0;
  std::size_t cap_hits = 0;
  double mean_tau = 0.0;
  double mean_ifo = 0.0;
  std::optional<double> ci95_tau;
  std::optional<double> ci95_ifo;
  double bound_tau = std::numeric_limits<double>::quiet_NaN();
  double bound_ifo = std::numeric_limits<double>::quiet_NaN();
  bool bound_valid = false;
  bool pass = false;  // bound_valid, no cap hits, and mean + ci within the bound
};

TrialSummary summarize_trials(const Experiment& ex, const std::vector<RunRecord>& records);

// Build, run, and summarize in one step.
TrialSummary estimate_expected_tau(const ExperimentConfig& config);

// Generalization sweep over the configured n_T values.
struct GeneralizeRow {
  std::size_t n_t = 0;
  std::size_t n_v = 0;
  std::size_t trials = 0;
  double mean_grad_sq_g = 0.0;
  double ci95 = 0.0;
  double bound_discrete = 0.0;
  std::optional<double> bound_continuous;
  bool pass = false;  // mean <= discrete bound + ci
};

std::vector<GeneralizeRow> run_generalize(const ExperimentConfig& config);
std::string generalize_csv(const std::vector<GeneralizeRow>& rows);

// Mean of the stopped sum S_tau = sum_{t<=tau} x_t over seeded trials, where
// increments come from the given generator and tau is the first t with
// stop_after(t, x_t) true. The identity E[S_tau] = 0 for conditionally
// centered increments and bounded tau is what the self-test exercises.
struct StoppedSumStats {
  double mean = 0.0;
  std::optional<double> ci95;
};

StoppedSumStats stopped_sum_stats(std::size_t trials, std::uint64_t seed,
                                  const std::function<double(RngStream&)>& increment,
                                  const std::function<bool(std::uint64_t, double)>& stop_after);

// Fair +-1 walk stopped at the first +1 or at step 50; passes when the mean
// of S_tau sits inside its own 95% interval around zero.
struct SelfTestResult {
  double mean = 0.0;
  double ci95 = 0.0;
  bool pass = false;
};

SelfTestResult optional_stopping_selftest(std::size_t trials, std::uint64_t seed);

// Deterministic serialization: doubles at 17 significant digits, stable
// column order, missing intervals spelled "na".
std::string format_double(double x);
std::string report_csv(const std::vector<TrialSummary>& summaries);
std::string report_json(const std::vector<TrialSummary>& summaries);
std::vector<TrialSummary> report_from_json(const std::string& text);

std::string run_record_json_line(const RunRecord& record, std::uint64_t trial,
                                 std::uint64_t trial_seed);
std::string run_records_csv(const std::vector<RunRecord>& records,
                            const std::vector<std::uint64_t>& trial_seeds);

std::string bound_reports_json(const std::vector<BoundReport>& reports);
std::string bound_reports_csv(const std::vector<BoundReport>& reports);

}  // namespace earlystop
