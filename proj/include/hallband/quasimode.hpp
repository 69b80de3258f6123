#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hallband/errors.hpp"
#include "hallband/fiber_solver.hpp"
#include "hallband/hermite.hpp"
#include "hallband/numerics.hpp"

// Approximate eigenfunctions (quasi-modes) f_n(x,k) = alpha Psi_n(x-k) + beta chi(x/k) Phi_n(x-k),
// their energy eta, defect epsilon, Kato-Temple enclosures, and the comparison
// against true fiber eigenfunctions.
namespace hallband::quasimode {

enum class CutoffKind { smoothstep7, exp_bump };

// Plateau cutoff: 1 on [0, 1/2], 0 on [3/4, inf), C^2, non-increasing.
// chi' and chi'' are analytic so the residual support stays exact.
struct CutoffSpec {
  CutoffKind transition = CutoffKind::exp_bump;

  struct Eval {
    double value, d1, d2;
  };

  Eval eval(double t) const {
    if (!(t >= 0.0)) throw validation_error("cutoff: t >= 0 required");
    if (t <= 0.5) return {1.0, 0.0, 0.0};
    if (t >= 0.75) return {0.0, 0.0, 0.0};
    const double s = 4.0 * (t - 0.5);  // transition variable on (0, 1)
    if (transition == CutoffKind::smoothstep7) {
      const double p = ((((-20.0 * s + 70.0) * s - 84.0) * s + 35.0)) * s * s * s * s;
      const double dp = ((((-140.0 * s + 420.0) * s - 420.0) * s + 140.0)) * s * s * s;
      const double d2p = ((((-840.0 * s + 2100.0) * s - 1680.0) * s + 420.0)) * s * s;
      return {1.0 - p, -4.0 * dp, -16.0 * d2p};
    }
    const double a = std::exp(-1.0 / (1.0 - s));
    const double b = std::exp(-1.0 / s);
    if (b == 0.0) return {1.0, 0.0, 0.0};
    if (a == 0.0) return {0.0, 0.0, 0.0};
    const double om = 1.0 - s;
    const double ap = -a / (om * om);
    const double bp = b / (s * s);
    const double app = a * (1.0 / (om * om * om * om) - 2.0 / (om * om * om));
    const double bpp = b * (1.0 / (s * s * s * s) - 2.0 / (s * s * s));
    const double den = a + b;
    const double sp = (ap * b - a * bp) / (den * den);
    const double spp =
        ((app * b - a * bpp) * den - 2.0 * (ap * b - a * bp) * (ap + bp)) / (den * den * den);
    return {a / den, 4.0 * sp, 16.0 * spp};
  }
};

struct QuasiMode {
  int n;
  double k;
  double alpha, beta;
  std::vector<double> grid;       // uniform on [0, k + margin], matches the solver grid
  std::vector<double> f, fprime;
  double boundary_slope;          // f_n'(0,k), assembled algebraically
  CutoffKind cutoff;
  // second-solution samples where chi > 0; zero beyond (kept for the residual)
  std::vector<double> phi, dphi;
  int cut_end;                    // first grid index with x >= 3k/4
};

struct Coefficients {
  double alpha, beta;
  double psi_at_mk, dpsi_at_mk, phi_at_mk, dphi_at_mk;
};

namespace detail {

struct Assembly {
  QuasiMode qm;
  Coefficients coeff;
};

inline Assembly assemble(int n, double k, const CutoffSpec& cutoff,
                         const fiber_solver::SolverConfig& config) {
  if (n < 1) throw validation_error("quasimode: n >= 1 required");
  if (!(k >= 2.0)) throw validation_error("quasimode: k >= 2 required");
  config.validate();
  const hermite::OscillatorIndex idx{n};

  const double L = k + config.domain_margin;
  const int N = numerics::even_steps(L, config.step);
  const double h = L / N;

  QuasiMode qm;
  qm.n = n;
  qm.k = k;
  qm.cutoff = cutoff.transition;
  qm.grid.resize(N + 1);
  for (int i = 0; i <= N; ++i) qm.grid[i] = i * h;

  int cut_end = N + 1;
  for (int i = 0; i <= N; ++i) {
    if (qm.grid[i] >= 0.75 * k) {
      cut_end = i;
      break;
    }
  }
  qm.cut_end = cut_end;

  // Phi_n(x - k) on the cutoff's support, marching leftward from x - k = cut down to -k
  std::vector<double> targets(cut_end);
  for (int i = 0; i < cut_end; ++i) targets[i] = qm.grid[cut_end - 1 - i] - k;
  std::vector<double> phi_desc, dphi_desc;
  const double ode_step = std::min(config.step, 1e-3);
  hermite::detail::second_solution_at(idx, targets, ode_step, phi_desc, dphi_desc);
  qm.phi.assign(N + 1, 0.0);
  qm.dphi.assign(N + 1, 0.0);
  for (int i = 0; i < cut_end; ++i) {
    qm.phi[i] = phi_desc[cut_end - 1 - i];
    qm.dphi[i] = dphi_desc[cut_end - 1 - i];
  }

  const auto at_mk = hermite::hermite_eval(idx, -k);
  const double phi_mk = qm.phi[0];
  const double dphi_mk = qm.dphi[0];
  const double phi_scale = std::abs(hermite::asymptotic_eval(idx, -k, hermite::Part::phi));
  if (std::abs(phi_mk) < 0.2 * phi_scale)
    throw numerical_error("quasimode: Phi_n(-k) too close to a zero, k too small",
                          "phi-near-zero");

  const double ratio = -at_mk.value / phi_mk;  // beta / alpha

  // assemble with alpha = 1, then normalize
  std::vector<double> raw(N + 1), raw_p(N + 1);
  for (int i = 0; i <= N; ++i) {
    const double x = qm.grid[i];
    const auto psi = hermite::hermite_eval(idx, x - k);
    const auto c = cutoff.eval(x / k);
    raw[i] = psi.value + ratio * c.value * qm.phi[i];
    raw_p[i] = psi.derivative +
               ratio * (c.d1 / k * qm.phi[i] + c.value * qm.dphi[i]);
  }
  std::vector<double> sq(N + 1);
  for (int i = 0; i <= N; ++i) sq[i] = raw[i] * raw[i];
  const double nrm2 = numerics::simpson(sq, h);
  if (!(nrm2 > 0.0)) throw numerical_error("quasimode: vanishing norm");
  const double alpha = 1.0 / std::sqrt(nrm2);
  const double beta = alpha * ratio;
  if (!(beta > 0.0)) throw numerical_error("quasimode: beta must be positive");

  qm.alpha = alpha;
  qm.beta = beta;
  qm.f.resize(N + 1);
  qm.fprime.resize(N + 1);
  for (int i = 0; i <= N; ++i) {
    qm.f[i] = alpha * raw[i];
    qm.fprime[i] = alpha * raw_p[i];
  }
  qm.f[0] = 0.0;  // Dirichlet matching is algebraic, pin it exactly
  qm.boundary_slope = alpha * at_mk.derivative + beta * dphi_mk;
  qm.fprime[0] = qm.boundary_slope;

  Assembly out;
  out.coeff = {alpha, beta, at_mk.value, at_mk.derivative, phi_mk, dphi_mk};
  out.qm = std::move(qm);
  return out;
}

}  // namespace detail

// beta = -alpha Psi_n(-k) / Phi_n(-k), alpha fixed by unit norm of the
// assembled quasi-mode.
inline Coefficients coefficients(int n, double k, CutoffSpec cutoff = {},
                                 const fiber_solver::SolverConfig& config = {}) {
  return detail::assemble(n, k, cutoff, config).coeff;
}

inline QuasiMode build(int n, double k, CutoffSpec cutoff = {},
                       const fiber_solver::SolverConfig& config = {}) {
  return detail::assemble(n, k, cutoff, config).qm;
}

struct EnergyReport {
  double eta;            // quadratic form of f
  double residual_norm;  // ||r||, r = (h(k) - E_n) f
  double epsilon;        // ||(h(k) - eta) f||
  bool support_ok;       // supp r inside [k/2, 3k/4]
  double interaction_term;  // -beta f'(0,k) Phi_n(-k), the leading gap content
};

inline EnergyReport energy_and_residual(const QuasiMode& qm) {
  const double h = qm.grid[1] - qm.grid[0];
  const double En = 2.0 * qm.n - 1.0;
  const std::size_t m = qm.grid.size();
  CutoffSpec cutoff{qm.cutoff};

  std::vector<double> form(m), rvals(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = qm.grid[i];
    const double xk = x - qm.k;
    form[i] = qm.fprime[i] * qm.fprime[i] + xk * xk * qm.f[i] * qm.f[i];
    const auto c = cutoff.eval(x / qm.k);
    rvals[i] = -qm.beta * (c.d2 / (qm.k * qm.k) * qm.phi[i] + 2.0 * c.d1 / qm.k * qm.dphi[i]);
  }
  const double eta = numerics::simpson(form, h);

  bool support_ok = true;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = qm.grid[i];
    if ((x < 0.5 * qm.k || x > 0.75 * qm.k) && rvals[i] != 0.0) support_ok = false;
  }

  std::vector<double> sq(m), dsq(m);
  for (std::size_t i = 0; i < m; ++i) {
    sq[i] = rvals[i] * rvals[i];
    const double d = rvals[i] - (eta - En) * qm.f[i];
    dsq[i] = d * d;
  }
  const double rn = std::sqrt(numerics::simpson(sq, h));
  const double eps = std::sqrt(numerics::simpson(dsq, h));
  const double interaction = -qm.beta * qm.boundary_slope * qm.phi[0];
  return {eta, rn, eps, support_ok, interaction};
}

struct KatoTempleEnclosure {
  double eta;
  double epsilon;
  double gap_lo, gap_hi;
  double lower, upper;
  bool valid;  // epsilon^2 < (gap_hi - eta)(eta - gap_lo)
};

inline KatoTempleEnclosure kato_temple(double eta, double epsilon, double gap_lo, double gap_hi) {
  if (!(gap_lo < gap_hi)) throw validation_error("kato_temple: gap_lo < gap_hi required");
  if (!(gap_lo < eta && eta < gap_hi))
    throw validation_error("kato_temple: eta must lie strictly inside the gap");
  if (!(epsilon >= 0.0)) throw validation_error("kato_temple: epsilon >= 0 required");
  KatoTempleEnclosure out{eta, epsilon, gap_lo, gap_hi,
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(), false};
  const double e2 = epsilon * epsilon;
  if (e2 < (gap_hi - eta) * (eta - gap_lo)) {
    out.valid = true;
    out.lower = eta - e2 / (gap_hi - eta);
    out.upper = eta + e2 / (eta - gap_lo);
  }
  return out;
}

struct EigenComparison {
  double sup_diff;        // sup |f - u| over the grid, after the sign gauge
  double sup_slope_diff;  // sup |f' - u'|
  bool sign_aligned;
};

// Compares the quasi-mode with the true eigenfunction on the shared grid,
// resolving the +-1 eigenfunction gauge by minimizing the sup difference.
inline EigenComparison eigen_comparison(int n, double k, CutoffSpec cutoff = {},
                                        const fiber_solver::SolverConfig& config = {}) {
  const QuasiMode qm = build(n, k, cutoff, config);
  const auto u = fiber_solver::eigenfunction({n, k}, config);
  if (u.grid.size() != qm.grid.size())
    throw numerical_error("eigen_comparison: grid mismatch between modules");
  double sup_plus = 0.0, sup_minus = 0.0;
  for (std::size_t i = 0; i < qm.f.size(); ++i) {
    sup_plus = std::max(sup_plus, std::abs(qm.f[i] - u.values[i]));
    sup_minus = std::max(sup_minus, std::abs(qm.f[i] + u.values[i]));
  }
  const double sign = (sup_plus <= sup_minus) ? 1.0 : -1.0;
  double sup = 0.0, sup_slope = 0.0;
  for (std::size_t i = 0; i < qm.f.size(); ++i) {
    sup = std::max(sup, std::abs(qm.f[i] - sign * u.values[i]));
    sup_slope = std::max(sup_slope, std::abs(qm.fprime[i] - sign * u.derivs[i]));
  }
  return {sup, sup_slope, true};
}

}  // namespace hallband::quasimode
