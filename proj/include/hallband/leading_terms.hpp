#pragma once

#include <cmath>

#include "hallband/errors.hpp"
#include "hallband/hermite.hpp"
#include "hallband/numerics.hpp"

namespace hallband::asymptotics {

// Double-precision floor on resolvable band gaps; below this lambda - E_n
// drowns in the eigenvalue tolerance.
inline constexpr double kDeltaFloor = 1e-11;

struct AsymptoticPoint {
  int n;
  double k;
  double lambda_lead;   // E_n + 2^{2n-1} gamma_n^2 k^{2n-1} e^{-k^2}
  double dlambda_lead;  // -2^{2n} gamma_n^2 k^{2n} e^{-k^2}
};

// Large-k closed forms for the band function and its derivative. The
// derivative is evaluated as -2k times the gap so the algebraic identity
// dlambda_lead = -2k (lambda_lead - E_n) holds bitwise.
inline AsymptoticPoint leading_terms(int n, double k) {
  if (n < 1) throw validation_error("leading_terms: n >= 1 required");
  if (!(k > 0.0)) throw validation_error("leading_terms: k > 0 required (k -> +inf form)");
  const auto lg = hermite::landau_gamma(hermite::OscillatorIndex{n});
  const double gap = numerics::ipow(2.0, 2 * n - 1) * lg.gamma * lg.gamma *
                     numerics::ipow(k, 2 * n - 1) * std::exp(-k * k);
  return {n, k, lg.energy + gap, -2.0 * k * gap};
}

}  // namespace hallband::asymptotics
