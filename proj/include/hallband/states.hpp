#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <variant>
#include <vector>

#include "hallband/asymptotics.hpp"
#include "hallband/errors.hpp"
#include "hallband/fiber_solver.hpp"
#include "hallband/numerics.hpp"

// Bulk states assembled from Fourier profiles supported in (k_n(delta), inf):
// normalization, carried current, strip-localization masses, field synthesis,
// and magnetic-field rescaling.
namespace hallband::states {

struct Indicator {
  double a, b;
};
struct Gaussian {
  double center, width;
};
struct Power {
  double p;
};
using Family = std::variant<Indicator, Gaussian, Power>;

inline const char* family_name(const Family& f) {
  if (std::holds_alternative<Indicator>(f)) return "indicator";
  if (std::holds_alternative<Gaussian>(f)) return "gaussian";
  return "power";
}

// Memoized fiber solutions keyed by (n, k) with k rounded to 1e-6; safe for
// concurrent insertion (entries are value-identical, last writer wins).
class SolverCache {
 public:
  explicit SolverCache(fiber_solver::SolverConfig config = {}) : config_(config) {}
  const fiber_solver::SolverConfig& config() const { return config_; }

  struct Node {
    double lambda;
    double dlambda;
    std::shared_ptr<const fiber_solver::EigenfunctionSample> sample;
  };

  Node at(int n, double k) {
    const auto key = std::make_pair(n, static_cast<long long>(std::llround(k * 1e6)));
    {
      std::lock_guard<std::mutex> lock(mtx_);
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    Node node = compute(n, k);
    std::lock_guard<std::mutex> lock(mtx_);
    return map_.emplace(key, std::move(node)).first->second;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mtx_);
    return map_.size();
  }

 private:
  Node compute(int n, double k) const {
    auto sol = fiber_solver::detail::solve({n, k}, config_);
    return {sol.point.lambda, sol.point.dlambda,
            std::make_shared<fiber_solver::EigenfunctionSample>(std::move(sol.sample))};
  }

  mutable std::mutex mtx_;
  std::map<std::pair<int, long long>, Node> map_;
  fiber_solver::SolverConfig config_;
};

struct BulkProfile {
  int n;
  double delta;
  Family family;
  double support_left;  // k_n(delta)
  double lo, hi;        // truncated support
  std::vector<double> panel_edges;
  int refinement;       // subdivision level of the base panels
  std::vector<double> nodes, weights, values;  // sum w v^2 = 1
  double norm_refine_delta;                    // norm change at the last doubling
};

namespace detail {

inline double family_value(const Family& fam, double support_left, double k) {
  if (const auto* f = std::get_if<Indicator>(&fam)) return (k >= f->a && k <= f->b) ? 1.0 : 0.0;
  if (const auto* f = std::get_if<Gaussian>(&fam)) {
    const double t = (k - f->center) / f->width;
    return std::exp(-0.5 * t * t);
  }
  const auto& f = std::get<Power>(fam);
  const double s = k - support_left;
  return (s >= 0.0) ? std::pow(1.0 + s, -f.p) : 0.0;
}

struct LevelQuadrature {
  std::vector<double> nodes, weights, values;
  double raw_norm;  // sum w phi^2 before normalization
};

inline LevelQuadrature quadrature_at_level(const BulkProfile& p, int level, int gl_order = 12) {
  const auto& rule = numerics::gauss_legendre(gl_order);
  LevelQuadrature out;
  const int parts = 1 << level;
  for (std::size_t j = 0; j + 1 < p.panel_edges.size(); ++j) {
    const double pa = p.panel_edges[j], pb = p.panel_edges[j + 1];
    for (int s = 0; s < parts; ++s) {
      const double a = pa + (pb - pa) * s / parts;
      const double b = pa + (pb - pa) * (s + 1) / parts;
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (int q = 0; q < gl_order; ++q) {
        out.nodes.push_back(mid + half * rule.nodes[q]);
        out.weights.push_back(half * rule.weights[q]);
      }
    }
  }
  out.values.resize(out.nodes.size());
  numerics::Accumulator acc;
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    out.values[i] = family_value(p.family, p.support_left, out.nodes[i]);
    acc.add(out.weights[i] * out.values[i] * out.values[i]);
  }
  out.raw_norm = acc.value();
  if (!(out.raw_norm > 0.0)) throw numerical_error("profile: vanishing norm");
  const double inv = 1.0 / std::sqrt(out.raw_norm);
  for (auto& v : out.values) v *= inv;
  return out;
}

// Band slope at a profile node. Nodes in the numerically flat band carry
// |lambda'| below 2k times the precision floor; they are reported as -0
// without touching the solver.
inline double node_dlambda(SolverCache& cache, int n, double k) {
  if (k >= 2.5) {
    const double gap = asymptotics::leading_terms(n, k).lambda_lead - (2.0 * n - 1.0);
    if (gap < asymptotics::kDeltaFloor) return -0.0;
  }
  return cache.at(n, k).dlambda;
}

}  // namespace detail

// Normalized Fourier profile with Gauss-Legendre panels on the truncated
// support; panels are doubled until the raw norm moves by less than 1e-8.
inline BulkProfile make_profile(int n, double delta, const Family& family,
                                SolverCache& cache) {
  const auto td = asymptotics::k_delta(n, delta, cache.config());
  BulkProfile p;
  p.n = n;
  p.delta = delta;
  p.family = family;
  p.support_left = td.k_numeric;

  const double slack = 1e-9;
  if (const auto* f = std::get_if<Indicator>(&family)) {
    if (!(f->b > f->a)) throw validation_error("indicator profile: b > a required");
    if (f->a < p.support_left - slack)
      throw validation_error("profile support leaks left of k_n(delta)");
    p.lo = std::max(f->a, p.support_left);
    p.hi = f->b;
  } else if (const auto* f = std::get_if<Gaussian>(&family)) {
    if (!(f->width > 0.0)) throw validation_error("gaussian profile: width > 0 required");
    const double radius = f->width * std::sqrt(16.0 * std::log(10.0));  // phi^2 below 1e-16 peak
    if (f->center - radius < p.support_left - slack)
      throw validation_error("profile support leaks left of k_n(delta)");
    p.lo = f->center - radius;
    p.hi = f->center + radius;
  } else {
    const auto& pw = std::get<Power>(family);
    if (!(pw.p > 0.5)) throw validation_error("power profile: p > 1/2 required for L^2");
    p.lo = p.support_left;
    p.hi = p.support_left + (std::pow(10.0, 8.0 / pw.p) - 1.0);  // phi^2 below 1e-16 peak
  }

  p.panel_edges.push_back(p.lo);
  double w = std::min(0.5, p.hi - p.lo);
  while (p.panel_edges.back() < p.hi) {
    p.panel_edges.push_back(std::min(p.panel_edges.back() + w, p.hi));
    w *= 2.0;
  }

  double prev_norm = -1.0;
  for (int level = 0; level <= 5; ++level) {
    const auto q = detail::quadrature_at_level(p, level);
    if (prev_norm >= 0.0 &&
        std::abs(q.raw_norm - prev_norm) < 1e-8 * std::max(1.0, q.raw_norm)) {
      p.refinement = level;
      p.nodes = q.nodes;
      p.weights = q.weights;
      p.values = q.values;
      p.norm_refine_delta = std::abs(q.raw_norm - prev_norm);
      return p;
    }
    prev_norm = q.raw_norm;
  }
  throw numerical_error("profile: quadrature failed to settle under panel doubling");
}

struct CurrentReport {
  double J;
  double sandwich_lo, sandwich_hi;  // [min, max] of lambda' over the sampled support
  double refine_delta;              // |J(level) - J(level - 1)|
  int solved_nodes;
};

// J = sum w lambda'(node) v^2; a probability-weighted average of the band
// velocity, so it always lies in the sandwich.
inline CurrentReport current(const BulkProfile& profile, SolverCache& cache) {
  auto eval = [&](const std::vector<double>& nodes, const std::vector<double>& weights,
                  const std::vector<double>& values, int* solved) {
    numerics::Accumulator acc;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    int ns = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double dl = detail::node_dlambda(cache, profile.n, nodes[i]);
      if (dl != 0.0) ++ns;
      acc.add(weights[i] * dl * values[i] * values[i]);
      lo = std::min(lo, dl);
      hi = std::max(hi, dl);
    }
    if (solved) *solved = ns;
    return std::tuple<double, double, double>{acc.value(), lo, hi};
  };

  int solved = 0;
  const auto [J, lo, hi] = eval(profile.nodes, profile.weights, profile.values, &solved);
  double refine_delta = 0.0;
  if (profile.refinement > 0) {
    const auto coarse = detail::quadrature_at_level(profile, profile.refinement - 1);
    const auto [Jc, lc, hc] = eval(coarse.nodes, coarse.weights, coarse.values, nullptr);
    refine_delta = std::abs(J - Jc);
  }
  return {J, lo, hi, refine_delta, solved};
}

struct EdgeCurrentBounds {
  double c_minus, c_plus;
  double k_lo, k_hi;  // lambda_n^{-1}(I)
};

namespace detail {

inline double invert_lambda(int n, double target, SolverCache& cache) {
  const double En = 2.0 * n - 1.0;
  const double delta = target - En;
  if (!(delta > 0.0)) throw validation_error("invert_lambda: target below the Landau level");
  if (delta < 2.0) return asymptotics::k_delta(n, delta, cache.config()).k_numeric;
  auto g = [&](double k) {
    return fiber_solver::eigenvalue({n, k}, cache.config()).lambda - target;
  };
  double lo = -2.0;
  double glo = g(lo);
  if (glo <= 0.0) throw validation_error("invert_lambda: target above the solver k-range");
  double hi = lo;
  double ghi = glo;
  for (int guard = 0; ghi >= 0.0; ++guard) {
    if (guard > 40) throw numerical_error("invert_lambda: expansion failed", "bracket-failure");
    hi += 1.0;
    ghi = g(hi);
  }
  return numerics::brent(g, hi - 1.0, hi, g(hi - 1.0), ghi, 1e-10);
}

}  // namespace detail

// c-(n, I) and c+(n, I): extremes of |lambda_n'| over the preimage of I.
inline EdgeCurrentBounds edge_current_bounds(int n, double i_lo, double i_hi, SolverCache& cache,
                                             int grid_points = 33) {
  if (!(std::isfinite(i_lo) && std::isfinite(i_hi) && i_lo < i_hi))
    throw validation_error("edge_current_bounds: bounded interval with i_lo < i_hi required");
  const double En = 2.0 * n - 1.0;
  if (i_lo <= En && En <= i_hi)
    throw validation_error(
        "edge_current_bounds: Landau level inside the closed interval (bulk interval)");
  if (i_hi <= En)
    throw validation_error("edge_current_bounds: interval below the band range of lambda_n");
  const double lam_at_lo_k = fiber_solver::eigenvalue({n, -2.0}, cache.config()).lambda;
  if (i_lo >= lam_at_lo_k)
    throw validation_error("edge_current_bounds: interval above the solver k-range");

  const double e_lo = std::max(i_lo, En + asymptotics::kDeltaFloor * 10.0);
  const double e_hi = std::min(i_hi, lam_at_lo_k);
  const double k_lo = detail::invert_lambda(n, e_hi, cache);
  const double k_hi = detail::invert_lambda(n, e_lo, cache);
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double k = k_lo + (k_hi - k_lo) * i / (grid_points - 1);
    const double a = std::abs(cache.at(n, k).dlambda);
    cmin = std::min(cmin, a);
    cmax = std::max(cmax, a);
  }
  if (!(cmin > 0.0))
    throw numerical_error("edge_current_bounds: velocity floor vanished inside the window");
  return {cmin, cmax, k_lo, k_hi};
}

namespace detail {

// integral of u^2 over [0, min(a, domain)] on the sample's uniform grid
inline double partial_mass(const fiber_solver::EigenfunctionSample& u, double a) {
  const double h = u.grid[1] - u.grid[0];
  const double L = u.grid.back();
  if (a >= L) {
    std::vector<double> sq(u.values.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = u.values[i] * u.values[i];
    return numerics::simpson(sq, h);
  }
  auto j = static_cast<std::size_t>(a / h);
  if (j >= u.values.size() - 1) j = u.values.size() - 2;
  std::size_t je = j - (j % 2);
  double result = 0.0;
  if (je >= 2) {
    std::vector<double> sq(je + 1);
    for (std::size_t i = 0; i <= je; ++i) sq[i] = u.values[i] * u.values[i];
    result = numerics::simpson(sq, h);
  }
  // trapezoid sliver from x_{je} to a with linear interpolation of u^2
  double x = je * h;
  std::size_t i = je;
  while (x < a && i + 1 < u.values.size()) {
    const double xe = std::min(x + h, a);
    const double f0 = u.values[i] * u.values[i];
    const double f1 = u.values[i + 1] * u.values[i + 1];
    const double t0 = (x - i * h) / h, t1 = (xe - i * h) / h;
    const double g0 = f0 + (f1 - f0) * t0;
    const double g1 = f0 + (f1 - f0) * t1;
    result += 0.5 * (g0 + g1) * (xe - x);
    x = xe;
    ++i;
  }
  return result;
}

inline double node_strip_mass(SolverCache& cache, int n, double k, double a) {
  const double margin = cache.config().domain_margin;
  if (a >= k + margin) return 1.0;   // strip covers the whole carrier
  if (k - a >= 26.0) return 0.0;     // tail below double-precision resolution
  return partial_mass(*cache.at(n, k).sample, a);
}

}  // namespace detail

struct StripMass {
  double mass;
  double refine_delta;
};

// sum over nodes of w v^2 * integral_0^a u_n(x, node)^2 dx.
inline StripMass strip_mass(const BulkProfile& profile, double a, SolverCache& cache) {
  if (!(a > 0.0)) throw validation_error("strip_mass: a > 0 required");
  auto eval = [&](const std::vector<double>& nodes, const std::vector<double>& weights,
                  const std::vector<double>& values) {
    numerics::Accumulator acc;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      acc.add(weights[i] * values[i] * values[i] *
              detail::node_strip_mass(cache, profile.n, nodes[i], a));
    return acc.value();
  };
  const double mass = eval(profile.nodes, profile.weights, profile.values);
  double refine_delta = 0.0;
  if (profile.refinement > 0) {
    const auto coarse = detail::quadrature_at_level(profile, profile.refinement - 1);
    refine_delta = std::abs(mass - eval(coarse.nodes, coarse.weights, coarse.values));
  }
  return {mass, refine_delta};
}

struct LocalizationResult {
  double mass;
  double bound;        // C_n eps^{2n-1} delta^{eps^2} |log delta|^{(2n-1)(1-eps^2)/2}
  double strip_width;  // a = (1 - eps) sqrt|log delta|
};

inline LocalizationResult localization_mass(const BulkProfile& profile, double epsilon,
                                            SolverCache& cache, double c_n = 1.0) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw validation_error("localization_mass: epsilon must lie in (0, 1)");
  const double L = std::abs(std::log(profile.delta));
  const double a = (1.0 - epsilon) * std::sqrt(L);
  const double mass = strip_mass(profile, a, cache).mass;
  const double bound = c_n * numerics::ipow(epsilon, 2 * profile.n - 1) *
                       std::pow(profile.delta, epsilon * epsilon) *
                       std::pow(L, (2.0 * profile.n - 1.0) * (1.0 - epsilon * epsilon) / 2.0);
  return {mass, bound, a};
}

struct FieldSample {
  std::vector<double> x_grid, y_grid;
  std::vector<std::complex<double>> values;  // row-major: values[ix * ny + iy]
};

// phi(x, y) = (2 pi)^{-1/2} sum_j w_j v_j e^{i k_j (y + phase_y0)} u_n(x, k_j).
inline FieldSample synthesize_state(const BulkProfile& profile, std::span<const double> x_grid,
                                    std::span<const double> y_grid, SolverCache& cache,
                                    double phase_y0 = 0.0) {
  for (double x : x_grid)
    if (!std::isfinite(x) || x < 0.0)
      throw validation_error("synthesize_state: x grid must be finite and nonnegative");
  for (double y : y_grid)
    if (!std::isfinite(y)) throw validation_error("synthesize_state: y grid must be finite");
  FieldSample out;
  out.x_grid.assign(x_grid.begin(), x_grid.end());
  out.y_grid.assign(y_grid.begin(), y_grid.end());
  const std::size_t nx = x_grid.size(), ny = y_grid.size();
  out.values.assign(nx * ny, {0.0, 0.0});
  const double pref = 1.0 / std::sqrt(2.0 * M_PI);
  std::vector<double> ux(nx);
  for (std::size_t j = 0; j < profile.nodes.size(); ++j) {
    const double k = profile.nodes[j];
    const double wv = profile.weights[j] * profile.values[j];
    if (wv == 0.0) continue;
    const auto node = cache.at(profile.n, k);
    const auto& u = *node.sample;
    const double h = u.grid[1] - u.grid[0];
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double x = x_grid[ix];
      if (x >= u.grid.back()) {
        ux[ix] = 0.0;
        continue;
      }
      const auto i = static_cast<std::size_t>(x / h);
      const double t = (x - i * h) / h;
      ux[ix] = u.values[i] + (u.values[i + 1] - u.values[i]) * t;
    }
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const std::complex<double> phase = std::polar(pref * wv, k * (y_grid[iy] + phase_y0));
      for (std::size_t ix = 0; ix < nx; ++ix) out.values[ix * ny + iy] += phase * ux[ix];
    }
  }
  return out;
}

// Trapezoid norm of the sampled field over its box.
inline double box_norm(const FieldSample& field) {
  const std::size_t nx = field.x_grid.size(), ny = field.y_grid.size();
  if (nx < 2 || ny < 2) throw validation_error("box_norm: need at least a 2x2 grid");
  numerics::Accumulator acc;
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const double wx = (ix == 0)        ? 0.5 * (field.x_grid[1] - field.x_grid[0])
                      : (ix == nx - 1) ? 0.5 * (field.x_grid[nx - 1] - field.x_grid[nx - 2])
                                       : 0.5 * (field.x_grid[ix + 1] - field.x_grid[ix - 1]);
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const double wy = (iy == 0)        ? 0.5 * (field.y_grid[1] - field.y_grid[0])
                        : (iy == ny - 1) ? 0.5 * (field.y_grid[ny - 1] - field.y_grid[ny - 2])
                                         : 0.5 * (field.y_grid[iy + 1] - field.y_grid[iy - 1]);
      acc.add(wx * wy * std::norm(field.values[ix * ny + iy]));
    }
  }
  return std::sqrt(acc.value());
}

struct LocalizationEntry {
  double epsilon;
  double strip_width;
  double mass;
  double localization_bound;
};

struct StateDiagnostics {
  int n;
  double delta;
  double norm;
  double current;
  double current_bound;
  double sandwich_lo, sandwich_hi;
  std::vector<LocalizationEntry> localization;
  double field_strength;
  double energy_lo, energy_hi;  // spectral window (E_n, E_n + delta), scaled by b
};

inline double current_bound_value(int n, double delta, double mu = -1.0) {
  if (mu < 0.0) mu = 2.0 * n - 1.0;
  const double L = std::abs(std::log(delta));
  return 2.0 * delta * std::sqrt(L) + mu * delta * std::log(L) / std::sqrt(L);
}

inline StateDiagnostics diagnose(const BulkProfile& profile, std::span<const double> epsilons,
                                 SolverCache& cache, double mu = -1.0, double c_n = 1.0) {
  StateDiagnostics d;
  d.n = profile.n;
  d.delta = profile.delta;
  numerics::Accumulator nrm;
  for (std::size_t i = 0; i < profile.nodes.size(); ++i)
    nrm.add(profile.weights[i] * profile.values[i] * profile.values[i]);
  d.norm = nrm.value();
  const auto cur = current(profile, cache);
  d.current = cur.J;
  d.sandwich_lo = cur.sandwich_lo;
  d.sandwich_hi = cur.sandwich_hi;
  d.current_bound = current_bound_value(profile.n, profile.delta, mu);
  for (double eps : epsilons) {
    const auto loc = localization_mass(profile, eps, cache, c_n);
    d.localization.push_back({eps, loc.strip_width, loc.mass, loc.bound});
  }
  d.field_strength = 1.0;
  d.energy_lo = 2.0 * profile.n - 1.0;
  d.energy_hi = d.energy_lo + profile.delta;
  return d;
}

// Field-strength rescaling: energies scale like b, currents like b^{1/2},
// lengths like b^{-1/2}; masses are unitarily invariant.
inline StateDiagnostics rescale_field(StateDiagnostics d, double b) {
  if (!(b > 0.0)) throw validation_error("rescale_field: b > 0 required");
  const double rb = std::sqrt(b);
  d.current *= rb;
  d.current_bound *= rb;
  d.sandwich_lo *= rb;
  d.sandwich_hi *= rb;
  d.energy_lo *= b;
  d.energy_hi *= b;
  for (auto& e : d.localization) e.strip_width /= rb;
  d.field_strength *= b;
  return d;
}

}  // namespace hallband::states
