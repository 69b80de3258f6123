#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "hallband/errors.hpp"

namespace hallband::numerics {

// Neumaier compensated summation.
class Accumulator {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double ipow(double x, int p) {
  if (p < 0) return 1.0 / ipow(x, -p);
  double r = 1.0;
  while (p > 0) {
    if (p & 1) r *= x;
    x *= x;
    p >>= 1;
  }
  return r;
}

// Number of integration steps for a uniform grid on [0, length]; always even
// so composite Simpson applies without a trailing odd cell.
inline int even_steps(double length, double step) {
  if (!(length > 0.0) || !(step > 0.0))
    throw validation_error("grid: length and step must be positive");
  auto n = static_cast<long long>(std::llround(length / step));
  if (n < 8) n = 8;
  if (n % 2) ++n;
  return static_cast<int>(n);
}

// Composite Simpson on a uniform grid with an even number of intervals.
inline double simpson(std::span<const double> f, double h) {
  const std::size_t m = f.size();
  if (m < 3 || m % 2 == 0)
    throw validation_error("simpson: need an odd number of samples (even interval count)");
  Accumulator acc;
  acc.add(f[0]);
  acc.add(f[m - 1]);
  for (std::size_t i = 1; i + 1 < m; ++i) acc.add((i % 2 ? 4.0 : 2.0) * f[i]);
  return acc.value() * h / 3.0;
}

struct Quadrature {
  std::vector<double> nodes;    // on (-1, 1)
  std::vector<double> weights;
};

// Gauss-Legendre nodes/weights by Newton iteration on the Legendre recurrence.
inline const Quadrature& gauss_legendre(int q) {
  static std::map<int, Quadrature> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(q);
  if (it != cache.end()) return it->second;
  if (q < 1) throw validation_error("gauss_legendre: order must be >= 1");
  Quadrature rule;
  rule.nodes.resize(q);
  rule.weights.resize(q);
  const int m = (q + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (q + 0.5));
    double pp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < q; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = q * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[q - 1 - i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[q - 1 - i] = rule.weights[i];
  }
  return cache.emplace(q, std::move(rule)).first->second;
}

// Brent root finder on a bracketing interval.
inline double brent(const std::function<double(double)>& f, double a, double b,
                    double fa, double fb, double xtol, int maxit = 200) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0))
    throw numerical_error("brent: root is not bracketed", "bracket-failure");
  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 0; it < maxit; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  return b;
}

struct LinearFit {
  double slope;
  double intercept;
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw numerical_error("fit_line: need at least 3 points", "degenerate-fit");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (det == 0.0) throw numerical_error("fit_line: degenerate abscissae", "degenerate-fit");
  return {(n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det};
}

}  // namespace hallband::numerics
