// earlystop: seeded runs of early-stopped SGD / DSGD / SVRG, closed-form
// bound reports, exact Wasserstein distances, generalization sweeps, and the
// optional-stopping self-test. Exit code 0 means every pass flag was true.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "earlystop/harness.hpp"

namespace {

using namespace earlystop;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct RunArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  std::string format = "csv";
};

int run_algorithm(Algorithm algorithm, const RunArgs& args) {
  ExperimentConfig config = load_experiment_config(args.config_path);
  config.algorithm = algorithm;
  if (args.seed) config.master_seed = *args.seed;
  if (args.trials) config.trials = *args.trials;

  const Experiment ex = build_experiment(config);
  const std::vector<RunRecord> records = run_trials(ex, config.master_seed, config.trials);
  const TrialSummary summary = summarize_trials(ex, records);

  std::vector<std::uint64_t> seeds;
  seeds.reserve(records.size());
  for (std::size_t trial = 0; trial < records.size(); ++trial)
    seeds.push_back(TrialRng(config.master_seed, trial).trial_seed());

  if (args.out) {
    std::string lines;
    for (std::size_t trial = 0; trial < records.size(); ++trial)
      lines += run_record_json_line(records[trial], trial, seeds[trial]) + "\n";
    write_file(*args.out + ".jsonl", lines);
    write_file(*args.out + ".csv", run_records_csv(records, seeds));
  }

  const std::vector<TrialSummary> summaries{summary};
  std::cout << (args.format == "json" ? report_json(summaries) : report_csv(summaries));
  return summary.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"early stopping experiment harness"};
  app.require_subcommand(1);

  RunArgs run_args;
  const auto add_run_flags = [&run_args](CLI::App* cmd) {
    cmd->add_option("--config", run_args.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", run_args.seed, "master seed (overrides the config)");
    cmd->add_option("--trials", run_args.trials, "trial count (overrides the config)");
    cmd->add_option("--out", run_args.out, "basename for <out>.jsonl and <out>.csv run records");
    cmd->add_option("--format", run_args.format, "summary format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  };
  CLI::App* cmd_sgd = app.add_subcommand("sgd", "early-stopped SGD trials");
  CLI::App* cmd_dsgd = app.add_subcommand("dsgd", "early-stopped decentralized SGD trials");
  CLI::App* cmd_svrg = app.add_subcommand("svrg", "early-stopped SVRG trials");
  add_run_flags(cmd_sgd);
  add_run_flags(cmd_dsgd);
  add_run_flags(cmd_svrg);

  std::string bounds_config;
  std::string bounds_format = "csv";
  CLI::App* cmd_bounds = app.add_subcommand("bounds", "print every applicable bound report");
  cmd_bounds->add_option("--config", bounds_config, "experiment config (JSON)")->required();
  cmd_bounds->add_option("--format", bounds_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  std::string mu1_path, mu2_path;
  double order_p = 1.0;
  std::optional<std::string> coupling_out;
  CLI::App* cmd_wass = app.add_subcommand("wasserstein", "exact distance between measure CSVs");
  cmd_wass->add_option("mu1", mu1_path, "first measure CSV")->required();
  cmd_wass->add_option("mu2", mu2_path, "second measure CSV")->required();
  cmd_wass->add_option("--p", order_p, "order p >= 1 (default 1)");
  cmd_wass->add_option("--coupling", coupling_out, "write the optimal plan to this CSV");

  RunArgs gen_args;
  CLI::App* cmd_gen = app.add_subcommand("generalize", "population-gradient Monte Carlo sweep");
  cmd_gen->add_option("--config", gen_args.config_path, "experiment config (JSON)")->required();
  cmd_gen->add_option("--seed", gen_args.seed, "master seed (overrides the config)");
  cmd_gen->add_option("--trials", gen_args.trials, "trial count (overrides the config)");
  cmd_gen->add_option("--out", gen_args.out, "also write the CSV here");

  std::size_t selftest_trials = 100000;
  std::uint64_t selftest_seed = 0;
  CLI::App* cmd_self = app.add_subcommand("selftest", "optional-stopping identity check");
  cmd_self->add_option("--trials", selftest_trials, "number of stopped walks (default 1e5)");
  cmd_self->add_option("--seed", selftest_seed, "master seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_sgd->parsed()) return run_algorithm(Algorithm::sgd, run_args);
    if (cmd_dsgd->parsed()) return run_algorithm(Algorithm::dsgd, run_args);
    if (cmd_svrg->parsed()) return run_algorithm(Algorithm::svrg, run_args);

    if (cmd_bounds->parsed()) {
      const Experiment ex = build_experiment(load_experiment_config(bounds_config));
      std::cout << (bounds_format == "json" ? bound_reports_json(ex.bounds)
                                            : bound_reports_csv(ex.bounds));
      for (const BoundReport& r : ex.bounds)
        if (!r.valid) return 1;
      return 0;
    }

    if (cmd_wass->parsed()) {
      const EmpiricalMeasure mu1 = EmpiricalMeasure::load_csv(mu1_path);
      const EmpiricalMeasure mu2 = EmpiricalMeasure::load_csv(mu2_path);
      std::cout << format_double(wasserstein(mu1, mu2, order_p)) << "\n";
      if (coupling_out) {
        const Coupling coupling = optimal_coupling(mu1, mu2, order_p);
        std::string csv;
        for (Eigen::Index i = 0; i < coupling.plan.rows(); ++i) {
          for (Eigen::Index j = 0; j < coupling.plan.cols(); ++j) {
            csv += format_double(coupling.plan(i, j));
            csv += (j + 1 < coupling.plan.cols()) ? "," : "";
          }
          csv += "\n";
        }
        write_file(*coupling_out, csv);
      }
      return 0;
    }

    if (cmd_gen->parsed()) {
      ExperimentConfig config = load_experiment_config(gen_args.config_path);
      if (gen_args.seed) config.master_seed = *gen_args.seed;
      if (gen_args.trials) config.trials = *gen_args.trials;
      const std::vector<GeneralizeRow> rows = run_generalize(config);
      const std::string csv = generalize_csv(rows);
      std::cout << csv;
      if (gen_args.out) write_file(*gen_args.out, csv);
      for (const GeneralizeRow& r : rows)
        if (!r.pass) return 1;
      return 0;
    }

    if (cmd_self->parsed()) {
      const SelfTestResult result = optional_stopping_selftest(selftest_trials, selftest_seed);
      std::cout << "mean," << format_double(result.mean) << "\n"
                << "ci95," << format_double(result.ci95) << "\n"
                << "pass," << (result.pass ? "true" : "false") << "\n";
      return result.pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
