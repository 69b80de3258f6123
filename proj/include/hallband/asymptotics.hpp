#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hallband/errors.hpp"
#include "hallband/fiber_solver.hpp"
#include "hallband/leading_terms.hpp"
#include "hallband/numerics.hpp"

namespace hallband::asymptotics {

struct ThresholdMomentum {
  int n;
  double delta;
  double k_numeric;    // root of lambda_n(k) = E_n + delta
  double k_expansion;  // two-term expansion
};

inline double k_expansion_formula(int n, double delta) {
  const double L = std::abs(std::log(delta));
  if (!(L > 0.0)) return std::numeric_limits<double>::quiet_NaN();  // singular at delta = 1
  return std::sqrt(L) + (2.0 * n - 1.0) / 4.0 * std::log(L) / std::sqrt(L);
}

namespace detail {

// Band gap probe for root-finding in k. Where the leading-order envelope already
// certifies lambda_n(k) - E_n < delta/2 the sign is known without solving,
// which keeps the bisection away from gaps below the precision floor.
inline double gap_minus_delta(int n, double k, double delta,
                              const fiber_solver::SolverConfig& c) {
  if (k >= 2.5) {
    const double lead_gap = leading_terms(n, k).lambda_lead - (2.0 * n - 1.0);
    if (1.5 * lead_gap < 0.5 * delta) return -0.5 * delta;
  }
  return fiber_solver::eigenvalue({n, k}, c).lambda - (2.0 * n - 1.0 + delta);
}

}  // namespace detail

// k_n(delta): the unique quasi-momentum with lambda_n(k) = E_n + delta.
inline ThresholdMomentum k_delta(int n, double delta,
                                 const fiber_solver::SolverConfig& config = {}) {
  if (n < 1) throw validation_error("k_delta: n >= 1 required");
  if (!(delta > 0.0 && delta < 2.0)) throw validation_error("k_delta: delta must lie in (0, 2)");
  if (delta < kDeltaFloor)
    throw numerical_error("k_delta: delta below the double-precision floor", "precision-floor");

  fiber_solver::SolverConfig c = config;
  if (delta < 1e-7) c.step = std::min(c.step, 1.25e-4);  // flat-band gaps need low integrator bias

  const double kexp = k_expansion_formula(n, delta);
  auto g = [&](double k) { return detail::gap_minus_delta(n, k, delta, c); };

  // the two-term expansion is a delta -> 0 form; seed moderate deltas generically
  double lo, hi;
  if (delta < 0.5 && std::isfinite(kexp)) {
    lo = kexp - 0.5;
    hi = kexp + 0.5;
  } else {
    lo = -2.0;
    hi = 2.0;
  }
  double glo = g(lo), ghi = g(hi);
  for (int guard = 0; glo <= 0.0 && guard < 8; ++guard) {
    lo -= 0.5;
    glo = g(lo);
  }
  for (int guard = 0; ghi >= 0.0 && guard < 8; ++guard) {
    hi += 0.5;
    ghi = g(hi);
  }
  if (!(glo > 0.0 && ghi < 0.0))
    throw numerical_error("k_delta: failed to bracket the threshold momentum", "bracket-failure");
  const double kn = numerics::brent(g, lo, hi, glo, ghi, 1e-12);
  return {n, delta, kn, kexp};
}

struct VelocityEnvelope {
  double bound;      // 2 delta sqrt|log delta| + mu delta log|log delta| / sqrt|log delta|
  double sweep_sup;  // max of -lambda_n'(k) over [k_n(delta), k_n(delta) + 4]
  double mu_n_used;
  double mu_min;     // smallest mu for which the bound still dominates the sweep
  double k_start;    // k_n(delta)
  double sup_at;     // argmax of the sweep
};

namespace detail {

inline double minus_dlambda(int n, double k, const fiber_solver::SolverConfig& c) {
  if (k >= 2.5) {
    const double lead_gap = leading_terms(n, k).lambda_lead - (2.0 * n - 1.0);
    // numerically flat band: |lambda'| < 2.5 k * floor there, below what the
    // boundary slope resolves in double precision
    if (lead_gap < kDeltaFloor) return 0.0;
  }
  return -fiber_solver::detail::solve({n, k}, c).point.dlambda;
}

}  // namespace detail

// Lemma bound on the band velocity beyond k_n(delta), with the measured sweep
// supremum it must dominate. mu < 0 selects the default calibration 2n - 1.
inline VelocityEnvelope velocity_envelope(int n, double delta, double mu = -1.0,
                                          const fiber_solver::SolverConfig& config = {},
                                          int grid_points = 17) {
  const auto td = k_delta(n, delta, config);
  if (mu < 0.0) mu = 2.0 * n - 1.0;
  const double L = std::abs(std::log(delta));
  const double bound = 2.0 * delta * std::sqrt(L) + mu * delta * std::log(L) / std::sqrt(L);
  double sup = 0.0, sup_at = td.k_numeric;
  for (int i = 0; i < grid_points; ++i) {
    const double k = td.k_numeric + 4.0 * i / (grid_points - 1);
    const double v = detail::minus_dlambda(n, k, config);
    if (v > sup) {
      sup = v;
      sup_at = k;
    }
  }
  const double mu_min = (sup - 2.0 * delta * std::sqrt(L)) * std::sqrt(L) / (delta * std::log(L));
  return {bound, sup, mu, mu_min, td.k_numeric, sup_at};
}

struct ConvergenceRow {
  double k;
  double rho;        // (lambda - E_n) / (lambda_lead - E_n)
  double rho_prime;  // lambda' / dlambda_lead
};

struct ConvergenceReport {
  int n;
  std::vector<ConvergenceRow> rows;
  double fitted_slope;  // least-squares slope of log|rho - 1| vs log k
};

inline ConvergenceReport convergence_report(int n, std::span<const double> k_grid,
                                            const fiber_solver::SolverConfig& config = {}) {
  if (k_grid.size() < 3)
    throw numerical_error("convergence_report: need at least 3 grid points", "degenerate-fit");
  for (double k : k_grid)
    if (!(k >= 2.5 && k <= 5.0))
      throw validation_error("convergence_report: k grid must lie in [2.5, 5.0]");
  ConvergenceReport rep;
  rep.n = n;
  std::vector<double> lx, ly;
  for (double k : k_grid) {
    const auto sol = fiber_solver::detail::solve({n, k}, config);
    const auto lead = leading_terms(n, k);
    const double rho = (sol.point.lambda - (2.0 * n - 1.0)) / (lead.lambda_lead - (2.0 * n - 1.0));
    const double rho_p = sol.point.dlambda / lead.dlambda_lead;
    rep.rows.push_back({k, rho, rho_p});
    lx.push_back(std::log(k));
    ly.push_back(std::log(std::abs(rho - 1.0)));
  }
  rep.fitted_slope = numerics::fit_line(lx, ly).slope;
  return rep;
}

}  // namespace hallband::asymptotics
