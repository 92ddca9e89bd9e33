#include <doctest.h>

#include "earlystop/stats.hpp"
#include "earlystop/svrg.hpp"
#include "oracles.hpp"

using namespace earlystop;
using testing_oracles::random_uniform_measure;

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

}  // namespace

TEST_CASE("standard hyperparameters") {
  SvrgHyperparams h = svrg_hyperparams(64, 2.0);
  CHECK(h.eta == doctest::Approx(0.0078125).epsilon(1e-15));
  CHECK(h.m == 85);

  h = svrg_hyperparams(1, 1.0);
  CHECK(h.eta == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(h.m == 1);

  h = svrg_hyperparams(27, 1.0);
  CHECK(h.eta == doctest::Approx(1.0 / 36.0).epsilon(1e-15));
  CHECK(h.m == 36);
}

TEST_CASE("anchors of the singleton run halve like plain descent") {
  // With one example the correction cancels and every inner direction equals
  // the anchor gradient, so the anchors follow x -> x/2.
  const SvrgConfig config{0.5, 1, 0.01, 100'000, 0};
  FiniteSumObjective obj(quadratic_problem(), EmpiricalMeasure::dirac(vec1(0.0)));
  const RunRecord r = run_svrg(std::move(obj), vec1(1.0), config, TrialRng(5, 0));
  CHECK(r.tau == 5);
  CHECK(!r.cap_hit);
  CHECK(r.final_x[0] == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(r.final_grad_sq_t == doctest::Approx(0.00390625).epsilon(1e-15));
  // four full epochs at n + 2m = 3 calls, plus the final anchor gradient
  CHECK(r.ifo_count == 4 * 3 + 1);
}

TEST_CASE("immediate stop costs one full gradient") {
  const SvrgConfig config{0.5, 4, 10.0, 100'000, 0};
  FiniteSumObjective obj(quadratic_problem(),
                         EmpiricalMeasure::uniform({vec1(0.0), vec1(0.5)}));
  const RunRecord r = run_svrg(std::move(obj), vec1(1.0), config, TrialRng(5, 1));
  CHECK(r.tau == 1);
  CHECK(r.ifo_count == 2);  // n_T
  CHECK(r.check_values.size() == 1);
}

TEST_CASE("epoch cap is an explicit outcome") {
  const SvrgConfig config{1e-12, 1, 1e-12, 3, 0};
  FiniteSumObjective obj(quadratic_problem(), EmpiricalMeasure::dirac(vec1(0.0)));
  const RunRecord r = run_svrg(std::move(obj), vec1(1.0), config, TrialRng(5, 2));
  CHECK(r.cap_hit);
  CHECK(r.tau == 3);
}

TEST_CASE("recorded inner directions are unbiased by atom enumeration") {
  RngStream gen(42);
  const auto data = random_uniform_measure(gen, 8, 2, 0.4);
  const LossFunction loss = quadratic_problem();
  SvrgConfig config{0.05, 10, 1e-6, 50, 100};

  FiniteSumObjective obj(loss, data);
  const RunRecord r = run_svrg(std::move(obj), Eigen::VectorXd::Ones(2), config, TrialRng(9, 0));
  REQUIRE(!r.inner_states.empty());

  for (const SvrgInnerState& state : r.inner_states) {
    // Mean over the atom draws of grad f(y, x) - grad f(y, anchor) + g must
    // equal the full gradient at x, exactly.
    FiniteSumObjective enumerator(loss, data);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(2);
    for (std::size_t i = 0; i < data.size(); ++i) {
      acc += enumerator.example_gradient(i, state.x) -
             enumerator.example_gradient(i, state.anchor) + state.anchor_gradient;
    }
    const Eigen::VectorXd mean_direction = acc / static_cast<double>(data.size());
    FiniteSumObjective full(loss, data);
    const Eigen::VectorXd grad = full.gradient(state.x) -
                                 full.gradient(state.anchor) + state.anchor_gradient;
    CHECK((mean_direction - grad).norm() <= 1e-12);
    // and the correction terms cancel in expectation:
    FiniteSumObjective plain(loss, data);
    CHECK((mean_direction - plain.gradient(state.x)).norm() <= 1e-12);
  }
}

TEST_CASE("gamma recursion hand cases") {
  SUBCASE("single inner step") {
    const GammaCertificate cert = gamma_from_recursion(0.1, 1.0, 1, 1.0);
    REQUIRE(cert.c_sequence.size() == 2);
    CHECK(cert.c_sequence[1] == 0.0);
    CHECK(cert.c_sequence[0] == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(cert.gamma == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(cert.valid);
  }

  SUBCASE("two inner steps") {
    const GammaCertificate cert = gamma_from_recursion(0.1, 1.0, 2, 1.0);
    REQUIRE(cert.c_sequence.size() == 3);
    CHECK(cert.c_sequence[2] == 0.0);
    CHECK(cert.c_sequence[1] == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(cert.c_sequence[0] == doctest::Approx(0.0212).epsilon(1e-12));
    CHECK(cert.gamma == doctest::Approx(0.0888).epsilon(1e-12));
    CHECK(cert.valid);
  }

  SUBCASE("gamma scales away with the step size") {
    const GammaCertificate tiny = gamma_from_recursion(1e-6, 1.0, 4, 1.0);
    CHECK(tiny.gamma > 0.0);
    CHECK(tiny.gamma < 2e-6);
  }

  SUBCASE("the analysis constant must be positive") {
    CHECK_THROWS(gamma_from_recursion(0.1, 0.0, 1, 1.0));
  }
}

TEST_CASE("gamma floor holds at the standard hyperparameters") {
  for (const std::int64_t n : {8, 27, 64}) {
    for (const double l_smooth : {1.0, 2.0}) {
      const GammaSearch gs = gamma_lower_bound_check(n, l_smooth);
      CHECK(gs.passes);
      CHECK(gs.gamma_star >=
            1.0 / (40.0 * l_smooth * std::pow(static_cast<double>(n), 2.0 / 3.0)));
      CHECK(gs.beta_star > 0.0);
    }
  }
}

TEST_CASE("epoch bound and oracle-call bound") {
  CHECK(svrg_tau_bound(2.0, 64, 1.0, 0.1) == doctest::Approx(12801.0).epsilon(1e-12));
  CHECK(svrg_tau_bound(1.0, 10, 0.0, 0.1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(svrg_tau_bound(1.0, 1, 1.0, 1.0) == doctest::Approx(41.0).epsilon(1e-15));

  CHECK(svrg_ifo_bound(1.0, 64, 85) == doctest::Approx(234.0).epsilon(1e-15));
  CHECK(svrg_ifo_bound(12801.0, 64, 85) == doctest::Approx(2995434.0).epsilon(1e-12));
  CHECK_THROWS(svrg_ifo_bound(10.0, 64, 0));
}

TEST_CASE("expected descent per epoch against the certified gamma") {
  RngStream gen(2023);
  const auto data = random_uniform_measure(gen, 16, 2, 0.4);
  const LossFunction loss = quadratic_problem();
  const auto n = static_cast<std::int64_t>(data.size());
  const SvrgHyperparams h = svrg_hyperparams(n, loss.smoothness_l);
  const GammaSearch gs = gamma_lower_bound_check(n, loss.smoothness_l);
  REQUIRE(gs.passes);

  const Eigen::VectorXd anchor = Eigen::VectorXd::Ones(2);
  FiniteSumObjective value_oracle(loss, data);
  const double f_anchor = value_oracle.value(anchor);

  RunningStat grad_sum_stat, f_next_stat;
  for (std::uint64_t trial = 0; trial < 500; ++trial) {
    RngStream stream = TrialRng(31, trial).stream(1);
    FiniteSumObjective obj(loss, data);
    const Eigen::VectorXd g = obj.gradient(anchor);
    Eigen::VectorXd x = anchor;
    double grad_sq_sum = 0.0;
    for (std::int64_t t = 0; t < h.m; ++t) {
      grad_sq_sum += mean_gradient(loss, data, x).squaredNorm();
      const std::size_t i = stream.next_index(data.size());
      const Eigen::VectorXd direction =
          obj.example_gradient(i, x) - obj.example_gradient(i, anchor) + g;
      x -= h.eta * direction;
    }
    grad_sum_stat.add(grad_sq_sum);
    f_next_stat.add(value_oracle.value(x));
  }

  const double lhs = grad_sum_stat.mean();
  const double rhs = (f_anchor - f_next_stat.mean()) / gs.gamma_star;
  const double slack = grad_sum_stat.ci95().value() +
                       f_next_stat.ci95().value() / gs.gamma_star;
  CHECK(lhs <= rhs + slack);
}

TEST_CASE("sample mean of the epoch count sits under the bound") {
  RngStream gen(404);
  const auto data = random_uniform_measure(gen, 16, 2, 0.3);
  const LossFunction loss = quadratic_problem();
  const auto n = static_cast<std::int64_t>(data.size());
  const SvrgHyperparams h = svrg_hyperparams(n, loss.smoothness_l);
  const double epsilon = 0.02;

  FiniteSumObjective value_oracle(loss, data);
  const Eigen::VectorXd x1 = Eigen::VectorXd::Ones(2);
  const double bound =
      svrg_tau_bound(loss.smoothness_l, n, value_oracle.value(x1) - loss.lower_bound, epsilon);

  const SvrgConfig config{h.eta, h.m, epsilon, 1'000'000, 0};
  RunningStat taus;
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    const RunRecord r = run_svrg(FiniteSumObjective(loss, data), x1, config, TrialRng(71, trial));
    REQUIRE(!r.cap_hit);
    CHECK(r.final_grad_sq_t <= epsilon);
    taus.add(static_cast<double>(r.tau));
  }
  CHECK(taus.mean() + taus.ci95().value() <= bound);
}
