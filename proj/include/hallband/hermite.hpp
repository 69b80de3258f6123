#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "hallband/errors.hpp"
#include "hallband/numerics.hpp"

// Harmonic-oscillator eigenfunctions Psi_n, the Wronskian-conjugate second
// solutions Phi_n, and their x -> -infinity asymptotic forms. Indexing follows
// the convention n = 1 for the ground state, E_n = 2n - 1.
namespace hallband::hermite {

struct OscillatorIndex {
  int n;
  explicit OscillatorIndex(int n_) : n(n_) {
    if (n < 1) throw validation_error("oscillator index: n >= 1 required");
  }
};

struct LandauGamma {
  double energy;  // E_n = 2n - 1
  double gamma;   // (2^{n-1} (n-1)! sqrt(pi))^{-1/2}
};

inline LandauGamma landau_gamma(OscillatorIndex idx) {
  double f = std::sqrt(M_PI);
  for (int j = 1; j < idx.n; ++j) f *= 2.0 * j;
  return {2.0 * idx.n - 1.0, 1.0 / std::sqrt(f)};
}

struct Eval {
  double value;
  double derivative;
};

// Psi_n(x) and Psi_n'(x) through the normalized recurrence on the damped
// functions (internal 0-based index m = n - 1):
//   psi_m = x sqrt(2/m) psi_{m-1} - sqrt((m-1)/m) psi_{m-2},
// which keeps every intermediate bounded; parity is exact in floating point.
inline Eval hermite_eval(OscillatorIndex idx, double x) {
  if (!std::isfinite(x)) throw validation_error("hermite_eval: x must be finite");
  const double damp = std::exp(-0.5 * x * x);
  double prev = 0.0;                            // psi_{m-1}
  double cur = std::pow(M_PI, -0.25) * damp;    // psi_0
  for (int m = 1; m <= idx.n - 1; ++m) {
    const double next = x * std::sqrt(2.0 / m) * cur - std::sqrt((m - 1.0) / m) * prev;
    prev = cur;
    cur = next;
  }
  const int m = idx.n - 1;
  const double deriv = (m == 0) ? -x * cur : std::sqrt(2.0 * m) * prev - x * cur;
  return {cur, deriv};
}

enum class Part { psi, dpsi, phi, dphi };

// Leading-order closed forms valid as x -> -infinity.
inline double asymptotic_eval(OscillatorIndex idx, double x, Part which) {
  if (!(x < 0.0)) throw validation_error("asymptotic_eval: x < 0 required");
  const auto lg = landau_gamma(idx);
  const int n = idx.n;
  switch (which) {
    case Part::psi:
      return lg.gamma * numerics::ipow(2.0, n - 1) * numerics::ipow(x, n - 1) * std::exp(-0.5 * x * x);
    case Part::dpsi:
      return -lg.gamma * numerics::ipow(2.0, n - 1) * numerics::ipow(x, n) * std::exp(-0.5 * x * x);
    case Part::phi:
      return std::exp(0.5 * x * x) / (lg.gamma * numerics::ipow(2.0, n) * numerics::ipow(x, n));
    case Part::dphi:
      return std::exp(0.5 * x * x) / (lg.gamma * numerics::ipow(2.0, n) * numerics::ipow(x, n - 1));
  }
  throw validation_error("asymptotic_eval: bad part");
}

namespace detail {

// Phi_n and Phi_n' at the target abscissae (descending, all <= 0), obtained by
// integrating u'' = (x^2 - E_n) u leftward from exact data at x = 0:
//   n odd:  Phi(0) = 0,               Phi'(0) = 1 / Psi_n(0)
//   n even: Phi(0) = -1 / Psi_n'(0),  Phi'(0) = 0   (even gauge)
// Leftward is the direction in which Phi grows, so the march is stable; the
// Wronskian Psi Phi' - Psi' Phi = 1 is exact at the seed and conserved up to
// integrator error, which the caller measures.
inline void second_solution_at(OscillatorIndex idx, std::span<const double> targets_desc,
                               double step, std::vector<double>& phi_out,
                               std::vector<double>& dphi_out) {
  const double energy = 2.0 * idx.n - 1.0;
  const auto at0 = hermite_eval(idx, 0.0);
  double v, w;
  if (idx.n % 2 == 1) {
    v = 0.0;
    w = 1.0 / at0.value;
  } else {
    v = -1.0 / at0.derivative;
    w = 0.0;
  }
  phi_out.clear();
  dphi_out.clear();
  phi_out.reserve(targets_desc.size());
  dphi_out.reserve(targets_desc.size());
  double x = 0.0;
  for (double target : targets_desc) {
    if (target > x + 1e-15)
      throw validation_error("second_solution: targets must descend from 0");
    const double len = x - target;
    if (len > 0.0) {
      const int m = std::max(1, static_cast<int>(std::ceil(len / step)));
      const double h = -len / m;
      for (int i = 0; i < m; ++i) {
        const double q1 = x * x - energy;
        const double xm = x + 0.5 * h;
        const double q2 = xm * xm - energy;
        const double xe = x + h;
        const double q3 = xe * xe - energy;
        const double k1v = w, k1w = q1 * v;
        const double k2v = w + 0.5 * h * k1w, k2w = q2 * (v + 0.5 * h * k1v);
        const double k3v = w + 0.5 * h * k2w, k3w = q2 * (v + 0.5 * h * k2v);
        const double k4v = w + h * k3w, k4w = q3 * (v + h * k3v);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        x = xe;
      }
      x = target;  // endpoint is exact by construction of h
    }
    if (!std::isfinite(v) || !std::isfinite(w))
      throw numerical_error("second_solution: non-finite state during integration");
    phi_out.push_back(v);
    dphi_out.push_back(w);
  }
}

}  // namespace detail

struct SolutionPairSample {
  std::vector<double> grid;  // strictly increasing
  std::vector<double> psi, dpsi, phi, dphi;
  double wronskian_error;    // max over grid of |Psi Phi' - Psi' Phi - 1|
};

// Samples {Psi_n, Phi_n} on [x_left, x_right] in the zero-free left tail of
// Psi_n. Fails if the window touches the oscillatory region or if Wronskian
// conservation degrades beyond wronskian_tol.
inline SolutionPairSample second_solution(OscillatorIndex idx, double x_left, double x_right,
                                          double step = 1e-3, double wronskian_tol = 1e-8) {
  if (!(step > 0.0) || step > 1e-3 + 1e-12)
    throw validation_error("second_solution: step must lie in (0, 1e-3]");
  if (!(x_left <= x_right)) throw validation_error("second_solution: x_left <= x_right required");
  if (!(x_right <= 0.0))
    throw validation_error("second_solution: window must sit in the left tail (x_right <= 0)");
  if (x_left < -26.0)
    throw numerical_error("second_solution: window too deep, e^{x^2/2} overflows", "overflow");

  SolutionPairSample out;
  const int m = std::max(1, static_cast<int>(std::llround((x_right - x_left) / step)));
  const double h = (x_right - x_left) / m;
  out.grid.resize(m + 1);
  for (int i = 0; i <= m; ++i) out.grid[i] = x_left + i * h;
  out.grid[m] = x_right;

  out.psi.resize(m + 1);
  out.dpsi.resize(m + 1);
  for (int i = 0; i <= m; ++i) {
    const auto e = hermite_eval(idx, out.grid[i]);
    out.psi[i] = e.value;
    out.dpsi[i] = e.derivative;
  }
  // zero of Psi_n inside the window means the caller left the monotone tail
  for (int i = 0; i < m; ++i) {
    if (out.psi[i] == 0.0 || (out.psi[i] > 0.0) != (out.psi[i + 1] > 0.0))
      throw numerical_error("second_solution: window touches the oscillatory region of Psi_n",
                            "oscillatory-window");
  }

  std::vector<double> targets(m + 1);
  for (int i = 0; i <= m; ++i) targets[i] = out.grid[m - i];
  std::vector<double> phi_desc, dphi_desc;
  detail::second_solution_at(idx, targets, step, phi_desc, dphi_desc);
  out.phi.resize(m + 1);
  out.dphi.resize(m + 1);
  for (int i = 0; i <= m; ++i) {
    out.phi[i] = phi_desc[m - i];
    out.dphi[i] = dphi_desc[m - i];
  }

  double werr = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double w = out.psi[i] * out.dphi[i] - out.dpsi[i] * out.phi[i];
    werr = std::max(werr, std::abs(w - 1.0));
  }
  out.wronskian_error = werr;
  if (werr > wronskian_tol)
    throw numerical_error("second_solution: Wronskian drift exceeds tolerance",
                          "wronskian-tolerance");
  return out;
}

}  // namespace hallband::hermite
