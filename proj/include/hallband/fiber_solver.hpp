#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hallband/errors.hpp"
#include "hallband/leading_terms.hpp"
#include "hallband/numerics.hpp"

// Eigenpairs of the Dirichlet fiber operator h(k) = -d^2/dx^2 + (x-k)^2 on
// (0, infinity), by two independent numerical routes: inward shooting (primary)
// and a finite-difference Sturm-bisection oracle with Richardson extrapolation.
// The full-line Iwatsuka operator -d^2/dx^2 + (|x|-k)^2 provides a third check
// through the identity mu_{2n}(k) = lambda_n(k).
namespace hallband::fiber_solver {

struct SolverConfig {
  double domain_margin = 14.0;  // right endpoint x = k + domain_margin
  double step = 5e-4;           // ODE / grid step
  double lambda_tol = 1e-12;    // root tolerance on the eigenvalue
  double renorm_threshold = 1e100;

  void validate() const {
    if (!(domain_margin >= 8.0)) throw validation_error("config: domain_margin >= 8 required");
    if (!(step > 0.0)) throw validation_error("config: step must be positive");
    if (!(lambda_tol > 0.0)) throw validation_error("config: lambda_tol must be positive");
    if (!(renorm_threshold > 0.0)) throw validation_error("config: renorm_threshold must be positive");
  }
};

struct FiberPoint {
  int n;
  double k;

  void validate() const {
    if (n < 1) throw validation_error("fiber point: band index n >= 1 required");
    if (!std::isfinite(k)) throw validation_error("fiber point: k must be finite");
  }
};

enum class Method { shooting, fd_oracle, iwatsuka };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::shooting: return "shooting";
    case Method::fd_oracle: return "fd_oracle";
    case Method::iwatsuka: return "iwatsuka";
  }
  return "?";
}

struct BandPoint {
  int n;
  double k;
  double lambda;
  double dlambda;
  double err_est;
  Method method;
};

struct EigenfunctionSample {
  std::vector<double> grid;    // uniform on [0, k + margin]
  std::vector<double> values;  // L2-normalized, values[0] = 0, u'(0) > 0
  std::vector<double> derivs;
  double boundary_slope;
  double norm_check;
};

namespace detail {

inline double domain_length(double k, const SolverConfig& c) {
  const double L = k + c.domain_margin;
  if (L < 6.0)
    throw numerical_error("fiber domain [0, k + margin] too short at this k", "truncation-domain");
  return L;
}

// Negative-pivot count of the shifted symmetric tridiagonal FD matrix equals
// the number of discrete eigenvalues below lambda.
inline int sturm_count_grid(double k, double lambda, double x0, double L, int N) {
  const double h = (L - x0) / N;
  const double inv_h2 = 1.0 / (h * h);
  const double e2 = inv_h2 * inv_h2;
  int count = 0;
  double q = 1.0;
  for (int i = 1; i < N; ++i) {
    const double x = x0 + i * h;
    const double xk = x - k;
    double d = 2.0 * inv_h2 + xk * xk - lambda;
    if (i > 1) d -= e2 / q;
    q = (d == 0.0) ? -1e-300 : d;
    if (q < 0.0) ++count;
  }
  return count;
}

// m-th eigenvalue (1-based) of the discrete operator by Sturm bisection.
inline double discrete_eigenvalue(double k, int m, double x0, double L, int N, double tol) {
  double lo = (k <= 0.0 && x0 == 0.0) ? k * k : 0.0;
  double hi = 4.0 * m + 3.0 + ((k < 0.0) ? k * k : 0.0);
  for (int guard = 0; sturm_count_grid(k, hi, x0, L, N) < m; ++guard) {
    if (guard > 60) throw numerical_error("discrete_eigenvalue: no upper bound found", "bracket-failure");
    hi = lo + 2.0 * (hi - lo);
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (sturm_count_grid(k, mid, x0, L, N) >= m)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Richardson pair over steps h and h/2 on the half-line problem.
inline std::pair<double, double> fd_lambda_richardson(int n, double k, const SolverConfig& c) {
  const double L = domain_length(k, c);
  const int n1 = std::max(16, static_cast<int>(std::llround(L / c.step)));
  const double l1 = discrete_eigenvalue(k, n, 0.0, L, n1, 1e-13);
  const double l2 = discrete_eigenvalue(k, n, 0.0, L, 2 * n1, 1e-13);
  return {(4.0 * l2 - l1) / 3.0, std::abs(l2 - l1) / 3.0 + 1e-12};
}

struct ShootOutcome {
  double F;        // sign-tracked v(0) / max|v|
  double v0, w0;   // boundary value and slope in the final scale
  double log_vmax; // log of the trajectory max in the final scale
};

// Integrates v'' = ((x-k)^2 - lambda) v inward from x = L with a decaying WKB
// seed, renormalizing when |v| exceeds the threshold, storing the trajectory on
// the uniform grid (values plus per-node log-scale offsets). The march stops at
// grid index i_stop.
inline ShootOutcome integrate_inward_to(double lambda, double k, double L, int N, int i_stop,
                                        double renorm_threshold, std::vector<double>& store_v,
                                        std::vector<double>& store_logscale) {
  const double h = L / N;
  const double mu0sq = (L - k) * (L - k) - lambda;
  if (!(mu0sq > 0.0))
    throw validation_error("shoot: lambda reaches the potential at the right endpoint");
  double v = 1.0, w = -std::sqrt(mu0sq);
  double vmax = 1.0;
  double logscale = 0.0;
  store_v.assign(N + 1, 0.0);
  store_logscale.assign(N + 1, 0.0);
  store_v[N] = v;
  double x = L;
  for (int i = N; i > i_stop; --i) {
    const double s = -h;
    const double x1 = x, x2 = x - 0.5 * h, x3 = x - h;
    const double q1 = (x1 - k) * (x1 - k) - lambda;
    const double q2 = (x2 - k) * (x2 - k) - lambda;
    const double q3 = (x3 - k) * (x3 - k) - lambda;
    const double k1v = w, k1w = q1 * v;
    const double k2v = w + 0.5 * s * k1w, k2w = q2 * (v + 0.5 * s * k1v);
    const double k3v = w + 0.5 * s * k2w, k3w = q2 * (v + 0.5 * s * k2v);
    const double k4v = w + s * k3w, k4w = q3 * (v + s * k3v);
    v += s / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    w += s / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    x = (i - 1) * h;
    if (!std::isfinite(v) || !std::isfinite(w))
      throw numerical_error("shoot: non-finite state during integration", "overflow");
    const double av = std::abs(v);
    if (av > vmax) vmax = av;
    if (av > renorm_threshold) {
      v /= av;
      w /= av;
      vmax /= av;
      logscale += std::log(av);
    }
    store_v[i - 1] = v;
    store_logscale[i - 1] = logscale;
  }
  return {v / vmax, v, w, std::log(vmax)};
}

inline ShootOutcome integrate_inward(double lambda, double k, double L, int N,
                                     double renorm_threshold) {
  std::vector<double> v, logs;
  return integrate_inward_to(lambda, k, L, N, 0, renorm_threshold, v, logs);
}

struct Solution {
  BandPoint point;
  EigenfunctionSample sample;
};

// Normalized eigenfunction for a known eigenvalue.
//
// In the numerically flat band regime (gap below the eigenvalue tolerance,
// k beyond roughly 5.5) the boundary stretch of the inward march is dominated
// by roundoff riding the inward-growing solution: the relative error of the
// boundary slope scales like eps * e^{k^2}. flat_regime = true therefore stops
// the march at x = k - 7 (the omitted true mass is below e^{-49}), reports a
// flat slope, and fixes the sign by the first significant lobe instead.
inline EigenfunctionSample eigenfunction_for(const FiberPoint& p, double lambda,
                                             const SolverConfig& c, bool flat_regime = false) {
  const double L = domain_length(p.k, c);
  const int N = numerics::even_steps(L, c.step);
  const double h = L / N;
  int i_stop = 0;
  if (flat_regime && p.k > 7.0)
    i_stop = std::min(N - 8, static_cast<int>(std::floor((p.k - 7.0) / h)));

  std::vector<double> raw, logs;
  const auto res = integrate_inward_to(lambda, p.k, L, N, i_stop, c.renorm_threshold, raw, logs);
  const double log_final = logs[i_stop];

  EigenfunctionSample out;
  out.grid.resize(N + 1);
  out.values.assign(N + 1, 0.0);
  // rebase every stored point to a common scale anchored at the trajectory max
  double log_peak = -std::numeric_limits<double>::infinity();
  for (int i = i_stop; i <= N; ++i) {
    if (raw[i] != 0.0)
      log_peak = std::max(log_peak, std::log(std::abs(raw[i])) + (logs[i] - log_final));
  }
  for (int i = 0; i <= N; ++i) out.grid[i] = i * h;
  for (int i = i_stop; i <= N; ++i) {
    if (raw[i] != 0.0) {
      const double m = std::log(std::abs(raw[i])) + (logs[i] - log_final) - log_peak;
      out.values[i] = std::copysign(std::exp(m), raw[i]);
    }
  }
  double slope = flat_regime ? 0.0 : res.w0 * std::exp(-log_peak);

  out.values[0] = 0.0;  // Dirichlet, enforced exactly

  std::vector<double> sq(N + 1);
  for (int i = 0; i <= N; ++i) sq[i] = out.values[i] * out.values[i];
  const double norm2 = numerics::simpson(sq, h);
  if (!(norm2 > 0.0)) throw numerical_error("eigenfunction: vanishing norm");
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& u : out.values) u *= inv;
  slope *= inv;

  // tail mass on the truncated end must be negligible
  const double mu_end = std::sqrt(std::max((L - p.k) * (L - p.k) - lambda, 1.0));
  const double tail = out.values[N] * out.values[N] / (2.0 * mu_end);
  if (tail > 1e-12)
    throw numerical_error("eigenfunction: truncated-domain tail mass too large",
                          "truncation-domain");

  double umax = 0.0;
  for (const double u : out.values) umax = std::max(umax, std::abs(u));
  bool positive;
  if (flat_regime || slope == 0.0) {
    // sign of the first significant lobe; equivalent to u'(0) > 0 when that
    // slope is representable
    positive = false;
    for (const double u : out.values) {
      if (std::abs(u) > 0.01 * umax) {
        positive = u > 0.0;
        break;
      }
    }
  } else {
    positive = slope > 0.0;
  }
  if (!positive) {
    for (auto& u : out.values) u = -u;
    slope = -slope;
  }
  out.boundary_slope = slope;

  // derivative samples via the ODE-consistent central difference
  out.derivs.resize(N + 1);
  out.derivs[0] = flat_regime ? 0.0 : out.boundary_slope;
  for (int i = 1; i < N; ++i) out.derivs[i] = (out.values[i + 1] - out.values[i - 1]) / (2.0 * h);
  out.derivs[N] = (out.values[N] - out.values[N - 1]) / h;

  // Sturm oscillation check: exactly n - 1 sign changes among significant lobes
  const double thresh = flat_regime ? 0.01 * umax : 1e-13 * umax;
  int flips = 0;
  int prev_sign = 0;
  for (int i = 1; i <= N; ++i) {
    if (std::abs(out.values[i]) <= thresh) continue;
    const int s = out.values[i] > 0.0 ? 1 : -1;
    if (prev_sign != 0 && s != prev_sign) ++flips;
    prev_sign = s;
  }
  if (flips != p.n - 1)
    throw numerical_error("eigenfunction: interior zero count disagrees with band index");

  std::vector<double> sq2(N + 1);
  for (int i = 0; i <= N; ++i) sq2[i] = out.values[i] * out.values[i];
  out.norm_check = numerics::simpson(sq2, h);
  return out;
}

inline Solution solve(const FiberPoint& p, const SolverConfig& c) {
  p.validate();
  c.validate();
  const double L = domain_length(p.k, c);
  const int N = numerics::even_steps(L, c.step);
  const double En = 2.0 * p.n - 1.0;

  // Numerically flat band: the gap sits below the resolvable floor and the
  // boundary slope below what the inward march can carry, so root-finding
  // would only return noise. Report the sub-floor gap and a flat slope.
  if (p.k >= 2.5) {
    const double lead_gap = asymptotics::leading_terms(p.n, p.k).lambda_lead - En;
    if (lead_gap < asymptotics::kDeltaFloor) {
      const double lambda = En + lead_gap;
      const auto [fd_lam, fd_err] = fd_lambda_richardson(p.n, p.k, c);
      if (std::abs(lambda - fd_lam) > 1e-6)
        throw disagreement_error("eigenvalue: flat-band value and FD oracle disagree at n=" +
                                 std::to_string(p.n) + " k=" + std::to_string(p.k));
      Solution sol;
      sol.sample = eigenfunction_for(p, En, c, /*flat_regime=*/true);
      sol.point = BandPoint{p.n,
                            p.k,
                            lambda,
                            -0.0,
                            asymptotics::kDeltaFloor + std::abs(lambda - fd_lam),
                            Method::shooting};
      return sol;
    }
  }

  auto F = [&](double lambda) {
    return integrate_inward(lambda, p.k, L, N, c.renorm_threshold).F;
  };

  // bracket: asymptotic seed in the flat-band regime, Sturm bisection otherwise
  double lo = 0.0, hi = 0.0, Flo = 0.0, Fhi = 0.0;
  bool bracketed = false;
  if (p.k >= 2.5) {
    const double gap = asymptotics::leading_terms(p.n, p.k).lambda_lead - En;
    if (gap > 1e3 * std::numeric_limits<double>::epsilon() * En) {
      lo = En + 0.3 * gap;
      hi = En + 3.0 * gap;
      Flo = F(lo);
      Fhi = F(hi);
      bracketed = (Flo > 0.0) != (Fhi > 0.0);
    }
  }
  if (!bracketed) {
    const int n1 = std::max(16, static_cast<int>(std::llround(L / c.step)));
    const double lam_d = discrete_eigenvalue(p.k, p.n, 0.0, L, n1, 1e-10);
    double w = std::max(1e-5, 1e-7 * std::abs(lam_d));
    for (int guard = 0; guard < 12; ++guard) {
      lo = lam_d - w;
      hi = lam_d + w;
      Flo = F(lo);
      Fhi = F(hi);
      if ((Flo > 0.0) != (Fhi > 0.0)) {
        bracketed = true;
        break;
      }
      w *= 4.0;
    }
  }
  if (!bracketed)
    throw numerical_error("eigenvalue: failed to bracket a sign change of the shooting function",
                          "bracket-failure");

  const double lambda = numerics::brent(F, lo, hi, Flo, Fhi, c.lambda_tol);

  // independent-oracle sentinel
  const auto [fd_lam, fd_err] = fd_lambda_richardson(p.n, p.k, c);
  const double dis = std::abs(lambda - fd_lam);
  if (dis > 1e-6)
    throw disagreement_error("eigenvalue: shooting and FD oracle disagree by " +
                             std::to_string(dis) + " at n=" + std::to_string(p.n) +
                             " k=" + std::to_string(p.k));
  if (!(lambda > En))
    throw numerical_error("eigenvalue: computed value does not exceed the Landau level");

  Solution sol;
  sol.sample = eigenfunction_for(p, lambda, c);
  sol.point = BandPoint{p.n,
                        p.k,
                        lambda,
                        -sol.sample.boundary_slope * sol.sample.boundary_slope,
                        dis + c.lambda_tol,
                        Method::shooting};
  return sol;
}

}  // namespace detail

// Number of discrete-operator eigenvalues strictly below lambda.
inline int sturm_count(double k, double lambda, const SolverConfig& config = {}) {
  config.validate();
  if (!std::isfinite(lambda)) throw validation_error("sturm_count: lambda must be finite");
  if (lambda > 0.0 && config.step * std::sqrt(lambda) > 0.1)
    throw validation_error("sturm_count: grid too coarse for this energy");
  const double L = detail::domain_length(k, config);
  const int N = std::max(16, static_cast<int>(std::llround(L / config.step)));
  return detail::sturm_count_grid(k, lambda, 0.0, L, N);
}

// Scale-normalized boundary value of the decaying solution; simple sign change
// at each lambda_n(k).
inline double shoot(double lambda, FiberPoint p, const SolverConfig& config = {}) {
  p.validate();
  config.validate();
  if (!std::isfinite(lambda)) throw validation_error("shoot: lambda must be finite");
  const double L = detail::domain_length(p.k, config);
  if (!(lambda < (config.domain_margin / 2.0) * (config.domain_margin / 2.0)))
    throw validation_error("shoot: lambda outside the truncation-safe range");
  const int N = numerics::even_steps(L, config.step);
  return detail::integrate_inward(lambda, p.k, L, N, config.renorm_threshold).F;
}

// Independent finite-difference eigenvalue with Richardson extrapolation.
inline BandPoint fd_oracle(FiberPoint p, const SolverConfig& config = {}) {
  p.validate();
  config.validate();
  const auto [lam, err] = detail::fd_lambda_richardson(p.n, p.k, config);
  const double safe = (config.domain_margin / 2.0) * (config.domain_margin / 2.0);
  if (lam > safe)
    throw numerical_error("fd_oracle: eigenvalue beyond the truncation-safe range",
                          "truncation-domain");
  const double hk = 1e-3;
  const double lp = detail::fd_lambda_richardson(p.n, p.k + hk, config).first;
  const double lm = detail::fd_lambda_richardson(p.n, p.k - hk, config).first;
  return {p.n, p.k, lam, (lp - lm) / (2.0 * hk), err, Method::fd_oracle};
}

inline BandPoint eigenvalue(FiberPoint p, const SolverConfig& config = {}) {
  return detail::solve(p, config).point;
}

inline EigenfunctionSample eigenfunction(FiberPoint p, const SolverConfig& config = {}) {
  return detail::solve(p, config).sample;
}

// lambda_n'(k) = -(u_n'(0,k))^2.
inline double hadamard_derivative(FiberPoint p, const SolverConfig& config = {}) {
  const auto s = detail::solve(p, config);
  return -s.sample.boundary_slope * s.sample.boundary_slope;
}

namespace detail {

// m-th eigenvalue (1-based) of the full-line Iwatsuka fiber
// -d^2/dx^2 + (|x|-k)^2 on [-L2, L2] by Sturm bisection.
inline double full_line_eigenvalue(int m, double k, double L2, double step) {
  const int N = std::max(32, static_cast<int>(std::llround(2.0 * L2 / step)));
  auto count = [&](double lam) {
    const double h = 2.0 * L2 / N;
    const double inv_h2 = 1.0 / (h * h);
    const double e2 = inv_h2 * inv_h2;
    int cnt = 0;
    double q = 1.0;
    for (int i = 1; i < N; ++i) {
      const double x = -L2 + i * h;
      const double xk = std::abs(x) - k;
      double d = 2.0 * inv_h2 + xk * xk - lam;
      if (i > 1) d -= e2 / q;
      q = (d == 0.0) ? -1e-300 : d;
      if (q < 0.0) ++cnt;
    }
    return cnt;
  };
  double lo = 0.0, hi = 4.0 * m + 3.0 + ((k < 0.0) ? k * k : 0.0);
  for (int guard = 0; count(hi) < m; ++guard) {
    if (guard > 60) throw numerical_error("iwatsuka: no upper bound found", "bracket-failure");
    hi = 2.0 * hi;
  }
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (count(mid) >= m)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::pair<double, double> full_line_richardson(int m, double k, const SolverConfig& c) {
  const double L2 = std::abs(k) + c.domain_margin;
  const double l1 = full_line_eigenvalue(m, k, L2, c.step);
  const double l2 = full_line_eigenvalue(m, k, L2, c.step / 2.0);
  return {(4.0 * l2 - l1) / 3.0, std::abs(l2 - l1) / 3.0 + 1e-12};
}

}  // namespace detail

// 2n-th eigenvalue of the full-line operator -d^2/dx^2 + (|x|-k)^2; equals
// lambda_n(k) because the odd eigenfunctions restrict to the Dirichlet half-line.
inline BandPoint iwatsuka_crosscheck(FiberPoint p, const SolverConfig& config = {}) {
  p.validate();
  config.validate();
  const int m = 2 * p.n;
  const auto [lam, err] = detail::full_line_richardson(m, p.k, config);
  const double hk = 1e-3;
  const double dl = (detail::full_line_richardson(m, p.k + hk, config).first -
                     detail::full_line_richardson(m, p.k - hk, config).first) /
                    (2.0 * hk);
  return {p.n, p.k, lam, dl, err, Method::iwatsuka};
}

struct SweepEntry {
  std::optional<BandPoint> point;
  std::string error;  // empty on success
};

// One BandPoint per k, order preserved; per-point failures are reported
// positionally and the sweep continues.
inline std::vector<SweepEntry> band_sweep(int n, std::span<const double> k_values,
                                          const SolverConfig& config = {}) {
  std::vector<SweepEntry> out;
  out.reserve(k_values.size());
  for (double k : k_values) {
    if (!std::isfinite(k)) throw validation_error("band_sweep: k values must be finite");
    SweepEntry e;
    try {
      e.point = eigenvalue(FiberPoint{n, k}, config);
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace hallband::fiber_solver
