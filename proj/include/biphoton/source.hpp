#pragma once

// Correlated Gaussian biphoton source. The transverse-momentum amplitude is
//
//   exp(-1/4 (k_s^2/d_s^2 + k_i^2/d_i^2 - 2 rho k_s k_i/(d_s d_i)))
//
// and its position-space transform (kernel exp(i k x), symmetric 1/2pi split)
// is again Gaussian with the cross term flipped:
//
//   exp(-(d_s^2 x_s^2 + d_i^2 x_i^2 + 2 rho d_s d_i x_s x_i)/(1 - rho^2)).
//
// Wavenumbers in 1/um, positions in um.

#include <Eigen/Dense>
#include <cmath>

#include "biphoton/config.hpp"
#include "biphoton/grid.hpp"

namespace biphoton {

inline double momentum_amplitude(const SourceParams& p, double k_s, double k_i) {
  double e = k_s * k_s / (p.delta_s * p.delta_s) +
             k_i * k_i / (p.delta_i * p.delta_i) -
             2.0 * k_s * k_i * p.rho / (p.delta_s * p.delta_i);
  return std::exp(-0.25 * e);
}

/// Covariance matrix of the position-space joint intensity, closed form:
/// var_s = 1/(4 d_s^2), var_i = 1/(4 d_i^2), cov = -rho/(4 d_s d_i).
inline Eigen::Matrix2d position_covariance(const SourceParams& p) {
  Eigen::Matrix2d c;
  c << 1.0 / (4.0 * p.delta_s * p.delta_s),
      -p.rho / (4.0 * p.delta_s * p.delta_i),
      -p.rho / (4.0 * p.delta_s * p.delta_i),
      1.0 / (4.0 * p.delta_i * p.delta_i);
  return c;
}

/// Normalized position-space joint amplitude sampled on the given axes.
/// Errors out when the axes capture less than 1 - 1e-6 of the probability
/// mass (bounded through the marginal tails).
inline ComplexField2D position_wavefunction(const SourceParams& p,
                                            const Axis& axis_s, const Axis& axis_i) {
  const double sig_s = 1.0 / (2.0 * p.delta_s);
  const double sig_i = 1.0 / (2.0 * p.delta_i);
  double lost = std::erfc(std::min(-axis_s.min_um, axis_s.max_um) / (sig_s * std::sqrt(2.0))) +
                std::erfc(std::min(-axis_i.min_um, axis_i.max_um) / (sig_i * std::sqrt(2.0)));
  if (lost > 1e-6)
    throw NumericError("source grid too narrow: captures less than 1-1e-6 of "
                       "the probability mass");

  ComplexField2D f{axis_s, axis_i, CMatrix(axis_s.n, axis_i.n)};
  const double inv = 1.0 / (1.0 - p.rho * p.rho);
  const double as = p.delta_s * p.delta_s, ai = p.delta_i * p.delta_i;
  const double cx = 2.0 * p.rho * p.delta_s * p.delta_i;
  for (int j = 0; j < axis_s.n; ++j) {
    double xs = axis_s.at(j);
    for (int k = 0; k < axis_i.n; ++k) {
      double xi = axis_i.at(k);
      f.amp(j, k) = std::exp(-(as * xs * xs + ai * xi * xi + cx * xs * xi) * inv);
    }
  }
  return normalize(f);
}

}  // namespace biphoton
