#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hallband/asymptotics.hpp"

using namespace hallband;

TEST_CASE("leading_terms closed forms and the exact -2k identity") {
  const auto a = asymptotics::leading_terms(1, 3.0);
  CHECK_THAT(a.lambda_lead - 1.0, Catch::Matchers::WithinRel(4.1776e-4, 1e-4));
  CHECK_THAT(a.dlambda_lead, Catch::Matchers::WithinRel(-2.5066e-3, 1e-4));

  for (int n : {1, 2, 3, 5}) {
    for (double k : {0.3, 1.0, 2.7, 4.4}) {
      const auto p = asymptotics::leading_terms(n, k);
      const double En = 2.0 * n - 1.0;
      // the identity dlambda_lead = -2k (lambda_lead - E_n) holds exactly in
      // the formulas; recomputing the gap through E_n + gap - E_n re-rounds at
      // ulp(E_n), so allow that much slack
      const double slack = 8.0 * std::numeric_limits<double>::epsilon() * En * 2.0 * k;
      REQUIRE(std::abs(p.dlambda_lead + 2.0 * k * (p.lambda_lead - En)) <= slack);
      REQUIRE(p.lambda_lead > En);
      REQUIRE(p.dlambda_lead < 0.0);
    }
  }

  // the gap k^{2n-1} e^{-k^2} decreases beyond sqrt(n - 1/2)
  for (int n : {1, 2, 3}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double k = std::sqrt(n - 0.5) + 0.05; k < 6.0; k += 0.25) {
      const double gap = asymptotics::leading_terms(n, k).lambda_lead - (2.0 * n - 1.0);
      REQUIRE(gap < prev);
      prev = gap;
    }
  }

  CHECK_THROWS_AS(asymptotics::leading_terms(1, 0.0), validation_error);
  CHECK_THROWS_AS(asymptotics::leading_terms(1, -2.0), validation_error);
}

TEST_CASE("k_delta: expansion value, defining identity, monotonicity") {
  CHECK_THAT(asymptotics::k_expansion_formula(1, 1e-6),
             Catch::Matchers::WithinAbs(3.89353, 1e-4));

  const auto td = asymptotics::k_delta(1, 1e-6);
  CHECK_THAT(td.k_numeric, Catch::Matchers::WithinAbs(3.906786, 2e-3));
  CHECK(std::abs(td.k_numeric - td.k_expansion) < 0.05);

  // defining identity through the solver
  const double lam = fiber_solver::eigenvalue({1, td.k_numeric}).lambda;
  CHECK(std::abs(lam - 1.0 - 1e-6) <= 1e-11);

  const auto td8 = asymptotics::k_delta(1, 1e-8);
  CHECK(td8.k_numeric > td.k_numeric);

  CHECK_THROWS_AS(asymptotics::k_delta(1, 3.0), validation_error);
  CHECK_THROWS_AS(asymptotics::k_delta(1, -0.5), validation_error);
  CHECK_THROWS_AS(asymptotics::k_delta(1, 0.0), validation_error);
  CHECK_THROWS_MATCHES(asymptotics::k_delta(1, 1e-12), numerical_error,
                       Catch::Matchers::Predicate<numerical_error>(
                           [](const numerical_error& e) { return e.reason() == "precision-floor"; },
                           "reason is precision-floor"));
}

TEST_CASE("k_delta composes with the eigenvalue solver across bands") {
  for (auto [n, delta] : std::vector<std::pair<int, double>>{{1, 1e-4}, {2, 1e-6}}) {
    const auto td = asymptotics::k_delta(n, delta);
    const double lam = fiber_solver::eigenvalue({n, td.k_numeric}).lambda;
    INFO("n=" << n << " delta=" << delta);
    REQUIRE(std::abs(lam - (2.0 * n - 1.0) - delta) <= 1e-11);
  }
}

TEST_CASE("velocity envelope dominates the measured sweep") {
  double prev_bound = std::numeric_limits<double>::infinity();
  for (double delta : {1e-4, 1e-6, 1e-8}) {
    const auto ve = asymptotics::velocity_envelope(1, delta);
    INFO("delta=" << delta);
    REQUIRE(ve.bound >= ve.sweep_sup);
    // the sup sits at the left endpoint: -lambda' decreases beyond k_n(delta)
    REQUIRE(ve.sup_at == ve.k_start);
    REQUIRE(ve.bound < prev_bound);  // envelope ordering in delta
    prev_bound = ve.bound;
  }

  // first term of the bound at delta = 1e-6
  const double L = std::abs(std::log(1e-6));
  CHECK_THAT(2.0 * 1e-6 * std::sqrt(L), Catch::Matchers::WithinRel(7.4338e-6, 1e-4));

  // the default calibration mu = 2n - 1 is generous: the minimal mu that
  // still dominates the sweep stays below it
  const auto ve = asymptotics::velocity_envelope(1, 1e-6);
  CHECK(ve.mu_min <= ve.mu_n_used);
  CHECK(ve.mu_n_used == 1.0);
}

TEST_CASE("convergence report: ratios approach 1 with an O(k^-2) slope") {
  const std::vector<double> grid{3.0, 3.5, 4.0, 4.5};
  for (int n : {1, 2}) {
    const auto rep = asymptotics::convergence_report(n, grid);
    REQUIRE(rep.rows.size() == 4);
    const double r3 = std::abs(rep.rows.front().rho - 1.0);
    const double r45 = std::abs(rep.rows.back().rho - 1.0);
    INFO("n=" << n << " rho(3)=" << rep.rows.front().rho
              << " rho(4.5)=" << rep.rows.back().rho << " slope=" << rep.fitted_slope);
    REQUIRE(r45 < r3);
    REQUIRE(r45 <= 0.2);
    REQUIRE(std::abs(rep.rows.back().rho_prime - 1.0) <= 0.2);
    REQUIRE(rep.fitted_slope >= -3.0);
    REQUIRE(rep.fitted_slope <= -1.0);
  }

  // frozen measured behavior for the third band: rho converges within the
  // window, the derivative ratio still carries a ~0.29 correction at k = 4.5
  const auto rep3 = asymptotics::convergence_report(3, grid);
  CHECK_THAT(rep3.rows.back().rho, Catch::Matchers::WithinAbs(0.8233, 5e-3));
  CHECK_THAT(rep3.rows.back().rho_prime, Catch::Matchers::WithinAbs(0.7126, 6e-3));

  CHECK_THROWS_AS(asymptotics::convergence_report(1, std::vector<double>{3.0, 6.0, 4.0}),
                  validation_error);
  CHECK_THROWS_AS(asymptotics::convergence_report(1, std::vector<double>{3.0, 4.0}),
                  numerical_error);
}

TEST_CASE("two-sided velocity sandwich on a window between thresholds") {
  const int n = 1;
  const double d1 = 1e-7, d2 = 1e-5;
  const auto t1 = asymptotics::k_delta(n, d1);
  const auto t2 = asymptotics::k_delta(n, d2);
  REQUIRE(t2.k_numeric < t1.k_numeric);
  const double mu = 2.0 * n - 1.0;
  const double L1 = std::abs(std::log(d1)), L2 = std::abs(std::log(d2));
  const double env_lo = 2.0 * d1 * std::sqrt(L1) - mu * d1 * std::log(L1) / std::sqrt(L1);
  const double env_hi = 2.0 * d2 * std::sqrt(L2) + mu * d2 * std::log(L2) / std::sqrt(L2);
  for (int i = 0; i <= 8; ++i) {
    const double k = t2.k_numeric + (t1.k_numeric - t2.k_numeric) * i / 8.0;
    const double v = -fiber_solver::eigenvalue({n, k}).dlambda;
    INFO("k=" << k << " -lambda'=" << v);
    REQUIRE(v >= env_lo);
    REQUIRE(v <= env_hi);
  }
}
