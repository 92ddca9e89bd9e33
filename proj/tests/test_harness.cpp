#include <doctest.h>

#include <algorithm>

#include "earlystop/harness.hpp"
#include "earlystop/stats.hpp"

using namespace earlystop;

namespace {

const char* kOracleConfig = R"({
  "algorithm": "sgd",
  "problem": "quadratic",
  "dimension": 1,
  "test_distribution": {"points": [[0.0]]},
  "n_T": 1, "n_V": 1,
  "x1": [1.0],
  "epsilon": 0.01,
  "m": 1,
  "eta": 0.5,
  "trials": 4,
  "seed": 42
})";

const char* kNoisyConfig = R"({
  "algorithm": "sgd",
  "problem": "quadratic",
  "dimension": 1,
  "test_distribution": {"points": [[-0.05], [-0.02], [0.02], [0.05]]},
  "n_T": 16, "n_V": 16,
  "x1": [1.0],
  "epsilon": 0.05,
  "m": 5,
  "c": 0.5,
  "trials": 200,
  "seed": 9
})";

}  // namespace

TEST_CASE("config parsing mirrors the documented keys") {
  const ExperimentConfig cfg = parse_experiment_config(kOracleConfig);
  CHECK(cfg.algorithm == Algorithm::sgd);
  CHECK(cfg.problem == "quadratic");
  CHECK(cfg.dimension == 1);
  CHECK(cfg.epsilon == 0.01);
  CHECK(cfg.m.value() == 1);
  CHECK(cfg.eta.value() == 0.5);
  CHECK(cfg.trials == 4);
  CHECK(cfg.master_seed == 42);
  REQUIRE(cfg.test_distribution.has_value());
  CHECK(cfg.test_distribution->size() == 1);

  CHECK_THROWS(parse_experiment_config("{"));
  CHECK_THROWS(parse_experiment_config(R"({"algorithm": "newton", "dimension": 1, "epsilon": 1})"));
}

TEST_CASE("deterministic oracle experiment summarizes exactly") {
  const TrialSummary s = estimate_expected_tau(parse_experiment_config(kOracleConfig));
  CHECK(s.trials == 4);
  CHECK(s.cap_hits == 0);
  CHECK(s.mean_tau == 5.0);
  CHECK(s.ci95_tau.value() == 0.0);
  CHECK(s.mean_ifo == 9.0);
  CHECK(s.bound_valid);
  CHECK(s.pass);
}

TEST_CASE("single trial reports no interval") {
  ExperimentConfig cfg = parse_experiment_config(kOracleConfig);
  cfg.trials = 1;
  const Experiment ex = build_experiment(cfg);
  const TrialSummary s = summarize_trials(ex, run_trials(ex, cfg.master_seed, 1));
  CHECK(s.trials == 1);
  CHECK(!s.ci95_tau.has_value());
  CHECK(!s.ci95_ifo.has_value());
  const std::string csv = report_csv({s});
  CHECK(csv.find(",na,") != std::string::npos);
}

TEST_CASE("statistical acceptance of the stopping-time bound through the harness") {
  const TrialSummary s = estimate_expected_tau(parse_experiment_config(kNoisyConfig));
  CHECK(s.trials == 200);
  CHECK(s.cap_hits == 0);
  CHECK(s.bound_valid);
  CHECK(s.pass);
  CHECK(s.mean_tau + s.ci95_tau.value() <= s.bound_tau);
}

TEST_CASE("experiment assembly pins datasets and certificates") {
  const ExperimentConfig cfg = parse_experiment_config(kNoisyConfig);
  const Experiment ex = build_experiment(cfg);
  CHECK(ex.data_t.size() == 16);
  CHECK(ex.data_v.size() == 16);
  CHECK(ex.sigma2 > 0.0);
  CHECK(ex.d1 >= 0.0);
  CHECK(ex.f_gap > 0.0);
  CHECK(ex.sgd_config.eta > 0.0);
  CHECK(!ex.bounds.empty());

  // same config, same seed: identical datasets
  const Experiment ex2 = build_experiment(cfg);
  for (std::size_t i = 0; i < ex.data_t.size(); ++i)
    CHECK(ex.data_t.point(i) == ex2.data_t.point(i));
}

TEST_CASE("trial failures carry the trial seed") {
  ExperimentConfig cfg = parse_experiment_config(kOracleConfig);
  cfg.eta = 1e9;  // diverges immediately -> nonfinite values surface as errors
  const Experiment ex = build_experiment(cfg);
  try {
    run_trials(ex, cfg.master_seed, 2);
  } catch (const std::runtime_error& e) {
    const std::string message = e.what();
    CHECK(message.find("trial") != std::string::npos);
    CHECK(message.find("seed") != std::string::npos);
    return;
  }
  // divergence may legitimately stop early via the cap instead
  const std::vector<RunRecord> records = run_trials(ex, cfg.master_seed, 1);
  CHECK((records[0].cap_hit || records[0].final_grad_sq_v <= cfg.epsilon));
}

TEST_CASE("optional stopping identity on the fair capped walk") {
  const SelfTestResult r = optional_stopping_selftest(100000, 0);
  CHECK(std::abs(r.mean) <= r.ci95);
  CHECK(r.ci95 < 0.02);
  CHECK(r.pass);
  CHECK_THROWS(optional_stopping_selftest(10, 0));
}

TEST_CASE("stopped-sum helper covers degenerate rules") {
  // deterministic zero increments: the stopped sum is exactly zero
  const StoppedSumStats zeros = stopped_sum_stats(
      500, 1, [](RngStream&) { return 0.0; },
      [](std::uint64_t t, double) { return t >= 5; });
  CHECK(zeros.mean == 0.0);

  // stop immediately: S_tau is a single centered coin flip
  const StoppedSumStats single = stopped_sum_stats(
      20000, 2, [](RngStream& s) { return (s.next_u64() & 1ULL) ? 1.0 : -1.0; },
      [](std::uint64_t, double) { return true; });
  CHECK(std::abs(single.mean) <= 2.0 / std::sqrt(20000.0));
}

TEST_CASE("reports are deterministic and round-trip") {
  const TrialSummary s = estimate_expected_tau(parse_experiment_config(kOracleConfig));
  const std::vector<TrialSummary> summaries{s, s};

  const std::string csv1 = report_csv(summaries);
  const std::string csv2 = report_csv(summaries);
  CHECK(csv1 == csv2);
  CHECK(csv1.find("algorithm,problem,trials,cap_hits,mean_tau") == 0);
  CHECK(std::count(csv1.begin(), csv1.end(), '\n') == 3);  // header + two rows

  const std::string json1 = report_json(summaries);
  const std::vector<TrialSummary> parsed = report_from_json(json1);
  REQUIRE(parsed.size() == 2);
  CHECK(report_json(parsed) == json1);
  CHECK(parsed[0].mean_tau == s.mean_tau);
  CHECK(parsed[0].pass == s.pass);

  CHECK_THROWS(report_csv({}));
}

TEST_CASE("permuting trial order leaves aggregates stable") {
  ExperimentConfig cfg = parse_experiment_config(kNoisyConfig);
  cfg.trials = 64;
  const Experiment ex = build_experiment(cfg);
  std::vector<RunRecord> records = run_trials(ex, cfg.master_seed, cfg.trials);

  const TrialSummary forward = summarize_trials(ex, records);
  std::reverse(records.begin(), records.end());
  const TrialSummary reversed = summarize_trials(ex, records);
  CHECK(std::abs(forward.mean_tau - reversed.mean_tau) <= 1e-12);
  CHECK(std::abs(forward.mean_ifo - reversed.mean_ifo) <= 1e-12);
  CHECK(std::abs(forward.ci95_tau.value() - reversed.ci95_tau.value()) <= 1e-12);
}

TEST_CASE("run records serialize with stable columns") {
  const ExperimentConfig cfg = parse_experiment_config(kOracleConfig);
  const Experiment ex = build_experiment(cfg);
  const std::vector<RunRecord> records = run_trials(ex, cfg.master_seed, 2);
  const std::vector<std::uint64_t> seeds{TrialRng(cfg.master_seed, 0).trial_seed(),
                                         TrialRng(cfg.master_seed, 1).trial_seed()};
  const std::string csv = run_records_csv(records, seeds);
  CHECK(csv.find("seed,tau,ifo,final_grad_norm_sq_V,final_grad_norm_sq_T") == 0);
  const std::string line = run_record_json_line(records[0], 0, seeds[0]);
  CHECK(line.find("\"tau\":5") != std::string::npos);
  CHECK(line.find('\n') == std::string::npos);
}

TEST_CASE("generalization sweep produces one row per size") {
  ExperimentConfig cfg = parse_experiment_config(R"({
    "algorithm": "svrg",
    "problem": "quadratic",
    "dimension": 1,
    "test_distribution": {"points": [[-1.0], [1.0]]},
    "n_T": 8, "n_V": 8,
    "x1": [1.0],
    "epsilon": 0.05,
    "trials": 20,
    "seed": 5,
    "n_T_values": [8, 16]
  })");
  const std::vector<GeneralizeRow> rows = run_generalize(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_t == 8);
  CHECK(rows[1].n_t == 16);
  for (const GeneralizeRow& row : rows) {
    CHECK(row.trials == 20);
    CHECK(row.pass);
  }
  const std::string csv = generalize_csv(rows);
  CHECK(csv.find("n_T,n_V,trials,mean_grad_sq_G,ci95,bound_discrete") == 0);
}

TEST_CASE("dsgd and svrg configs build through the harness") {
  const TrialSummary dsgd_summary = estimate_expected_tau(parse_experiment_config(R"({
    "algorithm": "dsgd",
    "problem": "quadratic",
    "dimension": 1,
    "test_distribution": {"points": [[-0.05], [-0.02], [0.02], [0.05]]},
    "n_T": 8, "n_V": 8,
    "x1": [1.0],
    "epsilon": 0.1,
    "m": 5,
    "topology": {"kind": "ring", "M": 4, "self_weight": 0.5},
    "trials": 25,
    "seed": 31
  })"));
  CHECK(dsgd_summary.algorithm == "dsgd");
  CHECK(dsgd_summary.cap_hits == 0);
  CHECK(dsgd_summary.pass);

  const TrialSummary svrg_summary = estimate_expected_tau(parse_experiment_config(R"({
    "algorithm": "svrg",
    "problem": "quadratic",
    "dimension": 1,
    "test_distribution": {"points": [[-0.05], [0.05]]},
    "n_T": 16,
    "x1": [1.0],
    "epsilon": 0.01,
    "trials": 25,
    "seed": 33
  })"));
  CHECK(svrg_summary.algorithm == "svrg");
  CHECK(svrg_summary.pass);
}
