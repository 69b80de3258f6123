#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <thread>
#include <vector>

#include "hallband/states.hpp"

using namespace hallband;
using states::Gaussian;
using states::Indicator;
using states::Power;

namespace {

states::SolverCache& shared_cache() {
  static states::SolverCache cache{fiber_solver::SolverConfig{}};
  return cache;
}

}  // namespace

TEST_CASE("make_profile: families, normalization, support validation") {
  auto& cache = shared_cache();
  const auto td = asymptotics::k_delta(1, 1e-4, cache.config());
  const double s = td.k_numeric;

  const auto ind = states::make_profile(1, 1e-4, Indicator{s, s + 1.0}, cache);
  double norm = 0.0;
  for (std::size_t i = 0; i < ind.nodes.size(); ++i) {
    norm += ind.weights[i] * ind.values[i] * ind.values[i];
    REQUIRE(ind.nodes[i] > ind.support_left);
    REQUIRE(ind.values[i] == ind.values[0]);  // flat after normalization
  }
  CHECK_THAT(norm, Catch::Matchers::WithinAbs(1.0, 1e-8));
  CHECK(ind.support_left == s);

  // far gaussian tail is acceptable
  CHECK_NOTHROW(states::make_profile(1, 1e-4, Gaussian{s + 6.0, 0.5}, cache));
  // support leaking left of k_n(delta)
  CHECK_THROWS_AS(states::make_profile(1, 1e-4, Indicator{s - 0.5, s + 0.5}, cache),
                  validation_error);
  CHECK_THROWS_AS(states::make_profile(1, 1e-4, Gaussian{s + 1.0, 0.5}, cache),
                  validation_error);
  // square-integrability of the power family
  CHECK_THROWS_AS(states::make_profile(1, 1e-4, Power{0.4}, cache), validation_error);
  CHECK_NOTHROW(states::make_profile(1, 1e-4, Power{1.0}, cache));
}

TEST_CASE("current: sign, sandwich, and the bulk-current bound scale") {
  auto& cache = shared_cache();
  const auto td = asymptotics::k_delta(1, 1e-4, cache.config());
  const double s = td.k_numeric;
  const auto profile = states::make_profile(1, 1e-4, Indicator{s, s + 1.0}, cache);
  const auto cur = states::current(profile, cache);

  CHECK(cur.J < 0.0);
  CHECK(cur.sandwich_lo <= cur.J);
  CHECK(cur.J <= cur.sandwich_hi + 1e-15);
  CHECK(std::abs(cur.J) <= states::current_bound_value(1, 1e-4));
  CHECK(cur.refine_delta <= 1e-8);

  // a profile pushed into the band tail carries much less current than delta
  const auto far = states::make_profile(1, 1e-4, Indicator{s + 1.0, s + 2.0}, cache);
  const auto curf = states::current(far, cache);
  CHECK(std::abs(curf.J) <= std::abs(cache.at(1, s + 1.0).dlambda));
  CHECK(std::abs(curf.J) < 1e-5);

  // edge lower bound: a compactly supported profile with inf support beyond
  // k_n(delta) carries at least c_minus of its energy window
  const double lam_lo = cache.at(1, s + 2.0).lambda;
  const double lam_hi = cache.at(1, s + 1.0).lambda;
  const auto eb = states::edge_current_bounds(1, lam_lo, lam_hi, cache);
  CHECK(std::abs(curf.J) >= eb.c_minus * (1.0 - 1e-6));
}

TEST_CASE("localization: Parseval, monotonicity in the strip width") {
  auto& cache = shared_cache();
  const auto td = asymptotics::k_delta(1, 1e-4, cache.config());
  const double s = td.k_numeric;
  const auto profile = states::make_profile(1, 1e-4, Indicator{s, s + 1.0}, cache);

  CHECK_THAT(states::strip_mass(profile, 1e9, cache).mass,
             Catch::Matchers::WithinAbs(1.0, 1e-6));

  double prev = -1.0;
  for (double a : {0.5, 1.0, 2.0, 3.5, 6.0}) {
    const double m = states::strip_mass(profile, a, cache).mass;
    REQUIRE(m >= prev - 1e-12);
    REQUIRE(m >= 0.0);
    REQUIRE(m <= 1.0 + 1e-9);
    prev = m;
  }

  const auto loc = states::localization_mass(profile, 0.5, cache);
  CHECK(loc.strip_width ==
        0.5 * std::sqrt(std::abs(std::log(1e-4))));
  CHECK(loc.mass < loc.bound);  // C_n = 1 is already generous on this battery

  CHECK_THROWS_AS(states::localization_mass(profile, 0.0, cache), validation_error);
  CHECK_THROWS_AS(states::localization_mass(profile, 1.0, cache), validation_error);
}

TEST_CASE("edge_current_bounds: positive floor away from thresholds") {
  auto& cache = shared_cache();
  const auto eb = states::edge_current_bounds(1, 1.5, 2.5, cache);
  CHECK(eb.c_minus > 0.0);
  CHECK(eb.c_minus <= eb.c_plus);
  CHECK(eb.k_lo < eb.k_hi);

  // touching the Landau level is a bulk interval
  CHECK_THROWS_AS(states::edge_current_bounds(1, 0.5, 1.5, cache), validation_error);
  CHECK_THROWS_AS(states::edge_current_bounds(2, 2.5, 3.5, cache), validation_error);
  // interval strictly above the threshold is accepted with a tiny floor
  const auto nb = states::edge_current_bounds(1, 1.0 + 1e-6, 2.0, cache);
  CHECK(nb.c_minus > 0.0);
  CHECK(nb.c_minus < 1e-4);
}

TEST_CASE("synthesize_state: Dirichlet line and the Fourier shift") {
  auto& cache = shared_cache();
  const auto td = asymptotics::k_delta(1, 1e-4, cache.config());
  const double s = td.k_numeric;
  const auto profile = states::make_profile(1, 1e-4, Indicator{s, s + 1.0}, cache);

  const double y0 = 0.5;
  std::vector<double> xg{0.0, 1.0, 2.5, 3.2, 4.0};
  std::vector<double> yg{-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> yg_shift{-0.5, 0.0, 0.5, 1.0, 1.5};
  const auto base = states::synthesize_state(profile, xg, yg_shift, cache);
  const auto mod = states::synthesize_state(profile, xg, yg, cache, y0);

  for (std::size_t iy = 0; iy < yg.size(); ++iy)
    CHECK(std::abs(base.values[0 * yg.size() + iy]) == 0.0);

  // multiplying the coefficients by e^{i k y0} shifts the field by y0
  for (std::size_t ix = 0; ix < xg.size(); ++ix)
    for (std::size_t iy = 0; iy < yg.size(); ++iy) {
      const auto a = mod.values[ix * yg.size() + iy];
      const auto b = base.values[ix * yg.size() + iy];
      REQUIRE(std::abs(a - b) <= 1e-12);
    }
}

TEST_CASE("synthesized box norm approaches 1 on a capturing box") {
  auto& cache = shared_cache();
  const auto td = asymptotics::k_delta(1, 1e-4, cache.config());
  const auto profile =
      states::make_profile(1, 1e-4, Gaussian{td.k_numeric + 4.0, 0.5}, cache);
  std::vector<double> xg, yg;
  for (double x = 0.0; x <= 12.0 + 1e-9; x += 0.05) xg.push_back(x);
  for (double y = -16.0; y <= 16.0 + 1e-9; y += 0.05) yg.push_back(y);
  const auto field = states::synthesize_state(profile, xg, yg, cache);
  const double nrm = states::box_norm(field);
  CHECK(nrm >= 0.99);
  CHECK(nrm <= 1.01);
}

TEST_CASE("rescale_field: identity, scaling laws, group law") {
  states::StateDiagnostics d;
  d.n = 1;
  d.delta = 1e-4;
  d.norm = 1.0;
  d.current = -2e-4;
  d.current_bound = 7e-4;
  d.sandwich_lo = -6e-4;
  d.sandwich_hi = -1e-6;
  d.localization = {{0.5, 1.5, 2e-3, 0.1}};
  d.field_strength = 1.0;
  d.energy_lo = 1.0;
  d.energy_hi = 1.0 + 1e-4;

  const auto id = states::rescale_field(d, 1.0);
  CHECK(id.current == d.current);
  CHECK(id.energy_hi == d.energy_hi);
  CHECK(id.localization[0].strip_width == d.localization[0].strip_width);

  const auto r4 = states::rescale_field(d, 4.0);
  CHECK_THAT(r4.current, Catch::Matchers::WithinRel(2.0 * d.current, 1e-15));
  CHECK_THAT(r4.energy_hi, Catch::Matchers::WithinRel(4.0 * d.energy_hi, 1e-15));
  CHECK_THAT(r4.localization[0].strip_width,
             Catch::Matchers::WithinRel(0.5 * d.localization[0].strip_width, 1e-15));
  CHECK(r4.localization[0].mass == d.localization[0].mass);
  CHECK(r4.field_strength == 4.0);

  const auto ab = states::rescale_field(states::rescale_field(d, 2.0), 3.0);
  const auto c6 = states::rescale_field(d, 6.0);
  CHECK_THAT(ab.current, Catch::Matchers::WithinRel(c6.current, 1e-14));
  CHECK_THAT(ab.energy_hi, Catch::Matchers::WithinRel(c6.energy_hi, 1e-14));
  CHECK(ab.field_strength == c6.field_strength);

  CHECK_THROWS_AS(states::rescale_field(d, 0.0), validation_error);
  CHECK_THROWS_AS(states::rescale_field(d, -2.0), validation_error);
}

TEST_CASE("solver cache is safe under concurrent access") {
  states::SolverCache cache{fiber_solver::SolverConfig{}};
  std::vector<std::thread> threads;
  std::vector<double> results(4, 0.0);
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&cache, &results, t] { results[t] = cache.at(1, 2.0).lambda; });
  for (auto& th : threads) th.join();
  for (int t = 1; t < 4; ++t) REQUIRE(results[t] == results[0]);
  CHECK(cache.size() == 1);
}

TEST_CASE("diagnose assembles the full report") {
  auto& cache = shared_cache();
  const auto td = asymptotics::k_delta(1, 1e-4, cache.config());
  const auto profile = states::make_profile(
      1, 1e-4, Indicator{td.k_numeric, td.k_numeric + 1.0}, cache);
  const std::vector<double> eps{0.5};
  const auto d = states::diagnose(profile, eps, cache);
  CHECK_THAT(d.norm, Catch::Matchers::WithinAbs(1.0, 1e-8));
  CHECK(std::abs(d.current) <= d.current_bound);
  CHECK(d.localization.size() == 1);
  CHECK(d.localization[0].mass >= 0.0);
  CHECK(d.energy_lo == 1.0);
  CHECK_THAT(d.energy_hi, Catch::Matchers::WithinRel(1.0 + 1e-4, 1e-12));
}
