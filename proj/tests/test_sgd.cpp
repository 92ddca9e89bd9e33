#include <doctest.h>

#include "earlystop/sgd.hpp"
#include "earlystop/stats.hpp"
#include "oracles.hpp"

using namespace earlystop;

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

FiniteSumObjective singleton_objective(double atom) {
  return FiniteSumObjective(quadratic_problem(), EmpiricalMeasure::dirac(vec1(atom)));
}

}  // namespace

TEST_CASE("deterministic quadratic run halves the iterate each step") {
  // x: 1, 0.5, 0.25, 0.125, 0.0625; the first squared gradient <= 0.01 shows
  // up at the fifth check.
  const SgdConfig config{0.5, 1, 0.01, 1'000'000};
  const RunRecord r = run_sgd(singleton_objective(0.0), singleton_objective(0.0), vec1(1.0),
                              config, BiasSpec{}, TrialRng(7, 0));
  CHECK(r.tau == 5);
  CHECK(!r.cap_hit);
  CHECK(r.final_x[0] == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(r.final_grad_sq_v == doctest::Approx(0.00390625).epsilon(1e-15));
  CHECK(r.ifo_count == 5 + 4);  // five checks on a singleton set, four updates
  CHECK(r.check_values.size() == 5);
}

TEST_CASE("stopping index is always 1 mod m") {
  const SgdConfig config{0.05, 4, 1e-3, 1'000'000};
  const RunRecord r = run_sgd(singleton_objective(0.0), singleton_objective(0.0), vec1(1.0),
                              config, BiasSpec{}, TrialRng(7, 1));
  CHECK(!r.cap_hit);
  CHECK(r.tau % 4 == 1);
  CHECK(r.final_grad_sq_v <= 1e-3);
}

TEST_CASE("immediate stop costs one validation sweep and no updates") {
  const SgdConfig config{0.5, 3, 2.0, 1'000'000};  // threshold above the initial gradient
  FiniteSumObjective obj_v(quadratic_problem(),
                           EmpiricalMeasure::uniform({vec1(0.0), vec1(0.5)}));
  const RunRecord r = run_sgd(singleton_objective(0.0), std::move(obj_v), vec1(1.0), config,
                              BiasSpec{}, TrialRng(7, 2));
  CHECK(r.tau == 1);
  CHECK(r.ifo_count == 2);  // n_V alone
  CHECK(r.check_values.size() == 1);
}

TEST_CASE("cap hit is an explicit outcome") {
  const SgdConfig config{1e-9, 1, 1e-12, 50};
  const RunRecord r = run_sgd(singleton_objective(0.0), singleton_objective(0.0), vec1(1.0),
                              config, BiasSpec{}, TrialRng(7, 3));
  CHECK(r.cap_hit);
  CHECK(r.tau <= 50);
}

TEST_CASE("unbiased runs log an identically zero drift trail") {
  const SgdConfig config{0.5, 1, 0.01, 1'000'000};
  const RunRecord r = run_sgd(singleton_objective(0.0), singleton_objective(0.0), vec1(1.0),
                              config, BiasSpec{}, TrialRng(7, 4));
  CHECK(r.drift_alpha == 0.0);
  CHECK(r.drift_beta == 0.0);
  REQUIRE(r.drift_audit.size() == 4);
  for (const DriftStep& step : r.drift_audit) {
    CHECK(step.v == 0.0);
    CHECK(step.u == 0.0);
    CHECK(step.delta_sq == 0.0);
  }
}

TEST_CASE("synthetic drift honors its certified envelope pathwise") {
  BiasSpec bias;
  bias.kind = BiasSpec::Kind::ar1;
  bias.alpha = 0.6;
  bias.beta = 0.01;
  const SgdConfig config{0.05, 2, 5e-3, 20'000};
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const RunRecord r = run_sgd(singleton_objective(0.0), singleton_objective(0.0), vec1(1.0),
                                config, bias, TrialRng(11, trial));
    REQUIRE(!r.drift_audit.empty());
    CHECK(r.drift_alpha == 0.6);
    CHECK(r.drift_beta == 0.01);
    CHECK(r.drift_audit.front().v <= r.drift_beta + 1e-15);
    for (std::size_t t = 0; t + 1 < r.drift_audit.size(); ++t) {
      const DriftStep& prev = r.drift_audit[t];
      const DriftStep& next = r.drift_audit[t + 1];
      CHECK(next.v <= prev.v * r.drift_alpha + prev.u + 1e-15);
      CHECK(next.delta_sq <= next.v + 1e-15);
    }
  }
}

TEST_CASE("drift level can be tied to the step size") {
  BiasSpec bias;
  bias.kind = BiasSpec::Kind::ar1;
  bias.alpha = 0.0;
  bias.rate_r = 2.0;
  CHECK(bias.resolved_beta(0.01) == doctest::Approx(0.02).epsilon(1e-15));
  const SgdConfig config{0.01, 1, 0.5, 100'000};
  const RunRecord r = run_sgd(singleton_objective(0.0), singleton_objective(0.0), vec1(1.0),
                              config, bias, TrialRng(13, 0));
  CHECK(r.drift_beta == doctest::Approx(0.02).epsilon(1e-15));
}

TEST_CASE("coupled step size") {
  CHECK(sgd_step_size(0.5, 1.0, 0.1, 10, 0.0, 0.0, 1.0, 0.0, 0.0) ==
        doctest::Approx(0.00125).epsilon(1e-15));
  CHECK(sgd_step_size(0.5, 2.0, 0.1, 10, 0.0, 0.0, 0.0, 0.0, 0.0) ==
        doctest::Approx(0.25).epsilon(1e-15));  // sigma2 = R = 0 degenerates to c/L
  CHECK(sgd_step_size(0.5, 2.0, 0.2, 5, 1.0, 0.1, 1.0, 2.0, 0.5) ==
        doctest::Approx(0.00075).epsilon(1e-12));
  CHECK_THROWS(sgd_step_size(0.5, 1.0, 0.01, 1, 1.0, 0.5, 1.0, 0.0, 0.0));  // eps <= 2 G^2 d1^2
  CHECK_THROWS(sgd_step_size(1.5, 1.0, 0.1, 1, 0.0, 0.0, 1.0, 0.0, 0.0));   // c outside (0,1)
}

TEST_CASE("stopping-time bound for an explicit step size") {
  SgdBoundParams p;
  p.l_smooth = 1.0;
  p.eta = 0.01;
  p.m = 1;
  p.epsilon = 0.1;
  p.sigma2 = 0.0;
  p.alpha = 0.0;
  p.beta = 0.0;
  p.g_lip = 0.0;
  p.d1 = 0.0;
  p.f_gap = 1.0;
  const BoundReport r = sgd_tau_bound(p);
  CHECK(r.valid);
  CHECK(r.value == doctest::Approx(4002.0).epsilon(1e-12));

  SUBCASE("failing validity condition flags the report") {
    p.sigma2 = 10.0;
    p.eta = 0.01;
    p.m = 10;
    const BoundReport bad = sgd_tau_bound(p);
    CHECK(!bad.valid);
    CHECK(std::isnan(bad.value));
  }

  SUBCASE("drift terms enter numerator and denominator") {
    p.eta = 0.001;
    p.m = 1;
    p.epsilon = 0.5;
    p.sigma2 = 1.0;
    p.alpha = 0.5;
    p.beta = 0.001;  // eta * R with R = 1
    const BoundReport drifted = sgd_tau_bound(p);
    CHECK(drifted.valid);
    CHECK(drifted.value == doctest::Approx(2000.504 / 0.244).epsilon(1e-12));
  }

  SUBCASE("step sizes above 1/L are rejected") {
    p.eta = 1.5;
    CHECK_THROWS(sgd_tau_bound(p));
  }
}

TEST_CASE("stopping-time bound at the coupled step size") {
  CoupledBoundParams p;
  p.c = 0.5;
  p.l_smooth = 1.0;
  p.m = 1;
  p.epsilon = 1.0;
  p.sigma2 = 1.0;
  p.rate_r = 0.0;
  p.alpha = 0.0;
  p.g_lip = 0.0;
  p.d1 = 0.0;
  p.f_gap = 1.0;
  CHECK(sgd_tau_bound_coupled(p).value == doctest::Approx(83.0).epsilon(1e-12));

  SUBCASE("noiseless case keeps only the flat terms") {
    p.sigma2 = 0.0;
    // 0 + (2 + 0.25)/(0.25 * 0.5) + 1 = 19
    CHECK(sgd_tau_bound_coupled(p).value == doctest::Approx(19.0).epsilon(1e-12));
  }

  SUBCASE("doubling epsilon shrinks the leading term") {
    p.epsilon = 2.0;
    // 4/(0.25 * 1) + (2 + 0.5)/(0.25 * 1) + 1 = 27
    CHECK(sgd_tau_bound_coupled(p).value == doctest::Approx(27.0).epsilon(1e-12));
  }

  SUBCASE("threshold at the irreducible gap is rejected") {
    p.g_lip = 1.0;
    p.d1 = 1.0;
    CHECK_THROWS(sgd_tau_bound_coupled(p));
  }
}

TEST_CASE("post-stationarity bound") {
  CHECK(post_stationarity_bound(0.09, 1.0, 0.0) == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(post_stationarity_bound(0.04, 1.0, 0.1) == doctest::Approx(0.09).epsilon(1e-12));
  CHECK(post_stationarity_bound(0.0, 2.0, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("oracle-call bound") {
  CHECK(sgd_ifo_bound(100.0, 10, 50) == doctest::Approx(650.0).epsilon(1e-15));
  CHECK(sgd_ifo_bound(1.0, 1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sgd_ifo_bound(4002.0, 1, 10) == doctest::Approx(44032.0).epsilon(1e-12));
}

TEST_CASE("stochastic direction is conditionally unbiased by atom enumeration") {
  RngStream rng(23);
  const auto data = testing_oracles::random_uniform_measure(rng, 8, 2, 0.5);
  FiniteSumObjective obj(quadratic_problem(), data);
  const Eigen::VectorXd x = rng.gaussian_vector(2);

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(2);
  for (std::size_t i = 0; i < obj.size(); ++i) acc += obj.example_gradient(i, x);
  CHECK(((acc / 8.0) - obj.gradient(x)).norm() == 0.0);
}

TEST_CASE("sample mean of the stopping time sits under the bound") {
  // Noisy quadratic: four atoms spread 0.1 around the origin, validation set
  // equal to the training set, so the bound hypotheses hold with d1 = 0.
  std::vector<Eigen::VectorXd> atoms{vec1(-0.1), vec1(-0.05), vec1(0.05), vec1(0.1)};
  const EmpiricalMeasure data = EmpiricalMeasure::uniform(atoms);
  const LossFunction loss = quadratic_problem();

  const double epsilon = 0.05;
  const std::int64_t m = 5;
  FiniteSumObjective probe_obj(loss, data);
  const double sigma2 = 1.1 * probe_obj.empirical_variance_bound({vec1(1.0), vec1(0.0)});
  const double eta = sgd_step_size(0.5, 1.0, epsilon, m, 1.0, 0.0, sigma2, 0.0, 0.0);

  SgdBoundParams p;
  p.l_smooth = 1.0;
  p.eta = eta;
  p.m = m;
  p.epsilon = epsilon;
  p.sigma2 = sigma2;
  p.g_lip = 1.0;
  p.d1 = 0.0;
  p.f_gap = FiniteSumObjective(loss, data).value(vec1(1.0));
  const BoundReport bound = sgd_tau_bound(p);
  REQUIRE(bound.valid);

  const SgdConfig config{eta, m, epsilon, 10'000'000};
  RunningStat taus;
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    const RunRecord r = run_sgd(FiniteSumObjective(loss, data), FiniteSumObjective(loss, data),
                                vec1(1.0), config, BiasSpec{}, TrialRng(51, trial));
    REQUIRE(!r.cap_hit);
    CHECK(r.final_grad_sq_v <= epsilon);
    taus.add(static_cast<double>(r.tau));
  }
  CHECK(taus.mean() + taus.ci95().value() <= bound.value);
}

TEST_CASE("biased runs also respect the bound") {
  BiasSpec bias;
  bias.kind = BiasSpec::Kind::ar1;
  bias.alpha = 0.5;
  bias.rate_r = 1.0;

  const double epsilon = 0.1;
  const double eta = sgd_step_size(0.5, 1.0, epsilon, 1, 1.0, 0.0, 0.0, 1.0, 0.5);

  SgdBoundParams p;
  p.l_smooth = 1.0;
  p.eta = eta;
  p.m = 1;
  p.epsilon = epsilon;
  p.sigma2 = 0.0;
  p.alpha = 0.5;
  p.beta = eta * 1.0;
  p.g_lip = 1.0;
  p.d1 = 0.0;
  p.f_gap = 0.5;
  const BoundReport bound = sgd_tau_bound(p);
  REQUIRE(bound.valid);

  const SgdConfig config{eta, 1, epsilon, 10'000'000};
  RunningStat taus;
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    const RunRecord r = run_sgd(singleton_objective(0.0), singleton_objective(0.0), vec1(1.0),
                                config, bias, TrialRng(77, trial));
    REQUIRE(!r.cap_hit);
    taus.add(static_cast<double>(r.tau));
  }
  CHECK(taus.mean() + taus.ci95().value() <= bound.value);
}

TEST_CASE("mismatched data dimensions are rejected") {
  FiniteSumObjective obj1(quadratic_problem(), EmpiricalMeasure::dirac(vec1(0.0)));
  FiniteSumObjective obj2(quadratic_problem(),
                          EmpiricalMeasure::dirac(Eigen::VectorXd::Zero(2)));
  const SgdConfig config{0.5, 1, 0.01, 100};
  CHECK_THROWS(run_sgd(std::move(obj1), std::move(obj2), vec1(1.0), config, BiasSpec{},
                       TrialRng(0, 0)));
}
