#pragma once

// Observables extracted from propagated joint fields: marginals, heralded
// conditionals, finite-detector profiles, Gaussian fits, iris radii,
// aperture transmission, centroid slopes and intensity/phase correlation
// diagnostics. Everything here is a pure function of its arguments.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "biphoton/grid.hpp"

namespace biphoton {

struct DetectorSpec {
  enum class Kind { point_like, finite_size };
  Kind kind = Kind::point_like;
  double center_um = 0.0;
  double diameter_um = 0.0; // finite-size only

  static DetectorSpec point(double center_um) {
    return {Kind::point_like, center_um, 0.0};
  }
  static DetectorSpec finite(double center_um, double diameter_um) {
    if (diameter_um <= 0)
      throw ConfigError("finite-size detector diameter must be > 0");
    return {Kind::finite_size, center_um, diameter_um};
  }
};

struct GaussianFit {
  double amplitude = 0;
  double center_um = 0;
  double sigma_um = 0;  // standard deviation of the fitted density
  double residual = 0;  // relative L2 misfit
};

/// Width conventions derived from one fit. sigma_fit is the 1/e^2 intensity
/// radius (twice the fitted standard deviation); w_paper equals the standard
/// FWHM of the fitted density and is the headline resolution figure.
struct WidthReport {
  double sigma_fit_um = 0;
  double w_paper_um = 0;  // sqrt(2 ln 2) * sigma_fit
  double fwhm_um = 0;     // 2 * w_paper

  static WidthReport from_fit(const GaussianFit& f) {
    WidthReport r;
    r.sigma_fit_um = 2.0 * f.sigma_um;
    r.w_paper_um = std::sqrt(2.0 * std::numbers::ln2) * r.sigma_fit_um;
    r.fwhm_um = 2.0 * r.w_paper_um;
    return r;
  }
};

// ---------------------------------------------------------------------------
// Profiles.

namespace detail {

inline BeamProfile1D raw_signal_profile(const ComplexField2D& f, const RVector& wi) {
  BeamProfile1D p{f.axis_s, RVector(f.axis_s.n)};
  p.values = f.amp.cwiseAbs2() * wi;
  return p;
}

}  // namespace detail

/// p_s(x_s) = integral of |psi|^2 over x_i, unit mass.
inline BeamProfile1D marginal_signal(const ComplexField2D& f) {
  return normalized(detail::raw_signal_profile(f, f.axis_i.weights()));
}

inline BeamProfile1D marginal_idler(const ComplexField2D& f) {
  BeamProfile1D p{f.axis_i, RVector(f.axis_i.n)};
  p.values = f.amp.cwiseAbs2().transpose() * f.axis_s.weights();
  return normalized(p);
}

/// Unnormalized heralded signal profile for a point-like detector at x_iC:
/// the joint intensity interpolated linearly between the two neighboring
/// idler columns. The mass of this raw profile carries the heralding
/// probability density and feeds the heralded transmission ratio.
inline BeamProfile1D conditional_slice_raw(const ComplexField2D& f, double x_ic_um) {
  if (!f.axis_i.contains(x_ic_um))
    throw ConfigError("heralding position lies outside the idler grid");
  double t = (x_ic_um - f.axis_i.min_um) / f.axis_i.spacing();
  int k = std::min(static_cast<int>(t), f.axis_i.n - 2);
  double w = t - k;
  BeamProfile1D p{f.axis_s, RVector(f.axis_s.n)};
  p.values = (1.0 - w) * f.amp.col(k).cwiseAbs2() + w * f.amp.col(k + 1).cwiseAbs2();
  return p;
}

inline BeamProfile1D conditional_slice(const ComplexField2D& f, double x_ic_um) {
  return normalized(conditional_slice_raw(f, x_ic_um));
}

/// Unnormalized finite-size-detector profile: joint intensity integrated over
/// the detector interval. Each idler sample contributes the overlap of its
/// quadrature cell with the interval, so the full-width limit recovers the
/// marginal exactly.
inline BeamProfile1D fsd_profile_raw(const ComplexField2D& f, const DetectorSpec& det) {
  if (det.kind != DetectorSpec::Kind::finite_size)
    throw ConfigError("fsd_profile requires a finite-size detector");
  double lo = det.center_um - 0.5 * det.diameter_um;
  double hi = det.center_um + 0.5 * det.diameter_um;
  if (hi < f.axis_i.min_um || lo > f.axis_i.max_um)
    throw ConfigError("finite-size detector does not overlap the idler grid");
  const double h = f.axis_i.spacing();
  RVector wi(f.axis_i.n);
  for (int k = 0; k < f.axis_i.n; ++k) {
    double a = std::max(lo, std::max(f.axis_i.min_um, f.axis_i.at(k) - 0.5 * h));
    double b = std::min(hi, std::min(f.axis_i.max_um, f.axis_i.at(k) + 0.5 * h));
    wi(k) = std::max(0.0, b - a);
  }
  return detail::raw_signal_profile(f, wi);
}

inline BeamProfile1D fsd_profile(const ComplexField2D& f, const DetectorSpec& det) {
  return normalized(fsd_profile_raw(f, det));
}

inline BeamProfile1D detector_profile(const ComplexField2D& f, const DetectorSpec& det) {
  return det.kind == DetectorSpec::Kind::point_like
             ? conditional_slice(f, det.center_um)
             : fsd_profile(f, det);
}

// ---------------------------------------------------------------------------
// Gaussian fit: Levenberg-Marquardt on A exp(-(x-mu)^2/(2 sigma^2)), seeded
// from the profile moments.

inline GaussianFit fit_gaussian(const BeamProfile1D& p) {
  const int n = p.axis.n;
  double peak = p.values.maxCoeff();
  if (!(peak > 0) || (p.values.array() > 0.01 * peak).count() < 8)
    throw NumericError("gaussian fit: degenerate profile (fewer than 8 "
                       "samples above 1% of peak)");

  double mass = profile_mass(p);
  RVector x = p.axis.samples();
  double mu = p.axis.weights().cwiseProduct(p.values).dot(x) / mass;
  double var = p.axis.weights().cwiseProduct(p.values)
                   .dot((x.array() - mu).square().matrix()) / mass;
  double a = peak, sg = std::sqrt(std::max(var, 1e-12));

  double lambda = 1e-3;
  RVector r(n);
  Eigen::MatrixXd jac(n, 3);
  auto eval = [&](double A, double m, double s, RVector& res) {
    res = p.values - (A * (-(x.array() - m).square() / (2 * s * s)).exp()).matrix();
    return res.squaredNorm();
  };
  double cost = eval(a, mu, sg, r);
  for (int iter = 0; iter < 200; ++iter) {
    for (int i = 0; i < n; ++i) {
      double u = (x(i) - mu) / sg;
      double g = std::exp(-0.5 * u * u);
      jac(i, 0) = g;
      jac(i, 1) = a * g * u / sg;
      jac(i, 2) = a * g * u * u / sg;
    }
    Eigen::Matrix3d h = jac.transpose() * jac;
    Eigen::Vector3d grad = jac.transpose() * r;
    Eigen::Matrix3d hd = h;
    hd.diagonal() *= 1.0 + lambda;
    Eigen::Vector3d step = hd.ldlt().solve(grad);
    double a2 = a + step(0), mu2 = mu + step(1), sg2 = sg + step(2);
    if (!(sg2 > 0) || !std::isfinite(sg2)) {
      lambda *= 10;
      continue;
    }
    double c2 = eval(a2, mu2, sg2, r);
    double rel = std::abs(step(0) / std::max(std::abs(a), 1e-300)) +
                 std::abs(step(1) / std::max(sg, 1e-300)) +
                 std::abs(step(2) / std::max(sg, 1e-300));
    if (c2 <= cost) {
      a = a2; mu = mu2; sg = sg2; cost = c2;
      lambda = std::max(lambda * 0.25, 1e-12);
      if (rel < 1e-10) break;
    } else {
      eval(a, mu, sg, r); // restore residual for the accepted point
      if (rel < 1e-10) break; // stalled at machine precision: converged
      lambda *= 10;
      if (lambda > 1e12)
        throw NumericError("gaussian fit did not converge");
    }
  }
  GaussianFit out{a, mu, std::abs(sg), std::sqrt(cost) / p.values.norm()};
  if (!(out.sigma_um > 0) || !std::isfinite(out.sigma_um))
    throw NumericError("gaussian fit did not converge");
  return out;
}

// ---------------------------------------------------------------------------
// Iris radius and transmission.

namespace detail {

/// Mass of p within |x| <= r, trapezoid with linear interpolation at the
/// interval ends.
inline double mass_within(const BeamProfile1D& p, double r) {
  double lo = std::max(-r, p.axis.min_um), hi = std::min(r, p.axis.max_um);
  if (hi <= lo) return 0.0;
  const double h = p.axis.spacing();
  auto value_at = [&](double x) {
    double t = (x - p.axis.min_um) / h;
    int k = std::clamp(static_cast<int>(t), 0, p.axis.n - 2);
    double w = t - k;
    return (1.0 - w) * p.values(k) + w * p.values(k + 1);
  };
  int k0 = static_cast<int>(std::ceil((lo - p.axis.min_um) / h - 1e-12));
  int k1 = static_cast<int>(std::floor((hi - p.axis.min_um) / h + 1e-12));
  if (k0 > k1) // both ends inside one cell
    return 0.5 * (value_at(lo) + value_at(hi)) * (hi - lo);
  double m = 0.0;
  double xl = p.axis.at(k0), xr = p.axis.at(k1);
  if (lo < xl) m += 0.5 * (value_at(lo) + p.values(k0)) * (xl - lo);
  if (hi > xr) m += 0.5 * (p.values(k1) + value_at(hi)) * (hi - xr);
  for (int k = k0; k < k1; ++k) m += 0.5 * (p.values(k) + p.values(k + 1)) * h;
  return m;
}

}  // namespace detail

/// Smallest radius of an origin-centered iris passing the given fraction of
/// a unit-mass density, bisected to 1e-4 relative. The profile must carry at
/// least `fraction` of its (unit) mass inside the grid.
inline double iris_radius(const BeamProfile1D& p, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("iris fraction must lie in (0, 1)");
  double r_hi = std::max(-p.axis.min_um, p.axis.max_um);
  double target = fraction;
  if (detail::mass_within(p, r_hi) < target)
    throw NumericError("iris_radius: requested fraction exceeds the profile "
                       "mass contained in the grid");
  double r_lo = 0.0;
  while ((r_hi - r_lo) > 1e-4 * r_hi) {
    double r = 0.5 * (r_lo + r_hi);
    (detail::mass_within(p, r) >= target ? r_hi : r_lo) = r;
  }
  return r_hi;
}

/// Fraction of probability passing an aperture of radius R on the signal
/// axis of the mid-plane field. With a detector, the ratio is taken on the
/// unnormalized heralded profile instead of the full joint intensity.
inline double transmission(const ComplexField2D& field_mid, double r_mo_um,
                           const DetectorSpec* detector = nullptr) {
  BeamProfile1D raw =
      detector == nullptr
          ? detail::raw_signal_profile(field_mid, field_mid.axis_i.weights())
          : (detector->kind == DetectorSpec::Kind::point_like
                 ? conditional_slice_raw(field_mid, detector->center_um)
                 : fsd_profile_raw(field_mid, *detector));
  double total = profile_mass(raw);
  if (!(total > 0)) return 0.0;
  return std::clamp(detail::mass_within(raw, r_mo_um) / total, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Centroid slope of the heralded profiles vs heralding position, Eq.-(6)
// style. residual is the rms misfit of the linear fit relative to the total
// centroid excursion |slope| * range (absolute micrometers when the slope
// vanishes).

struct SlopeFit {
  double slope = 0;
  double residual = 0;
};

inline SlopeFit heralded_slope(const ComplexField2D& field_out,
                               const std::vector<double>& x_ic_um,
                               const DetectorSpec& kind_template) {
  if (x_ic_um.size() < 3)
    throw ConfigError("heralded_slope needs at least 3 heralding positions");
  const int m = static_cast<int>(x_ic_um.size());
  RVector xc(m), sc(m);
  for (int j = 0; j < m; ++j) {
    DetectorSpec det = kind_template;
    det.center_um = x_ic_um[j];
    BeamProfile1D prof = detector_profile(field_out, det);
    sc(j) = fit_gaussian(prof).center_um;
    xc(j) = x_ic_um[j];
  }
  double mx = xc.mean(), ms = sc.mean();
  double sxx = (xc.array() - mx).square().sum();
  if (!(sxx > 0)) throw ConfigError("heralding positions must not coincide");
  SlopeFit fit;
  fit.slope = (xc.array() - mx).matrix().dot((sc.array() - ms).matrix()) / sxx;
  double rms = std::sqrt(
      (sc.array() - ms - fit.slope * (xc.array() - mx)).square().mean());
  double range = xc.maxCoeff() - xc.minCoeff();
  double denom = std::abs(fit.slope) * range;
  fit.residual = denom > 0 ? rms / denom : rms;
  return fit;
}

// ---------------------------------------------------------------------------
// Correlation diagnostics.

inline double intensity_pearson(const ComplexField2D& f) {
  IntensityMoments m = intensity_moments(f);
  double d = m.var_s * m.var_i;
  if (!(d > 0)) throw NumericError("intensity_pearson: zero variance");
  return m.cov_si / std::sqrt(d);
}

struct PhaseMap {
  Eigen::MatrixXd arg;                      // principal value in (-pi, pi]
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
};

/// Entrywise argument; entries below 1e-12 of the peak magnitude are flagged
/// invalid (their argument is numerical noise).
inline PhaseMap phase_map(const ComplexField2D& f) {
  PhaseMap p;
  p.arg = f.amp.array().arg();
  double peak = f.amp.cwiseAbs().maxCoeff();
  p.valid = f.amp.cwiseAbs().array() >= 1e-12 * peak;
  return p;
}

/// Mixed cross-structure of the phase: rms of the wrapped plaquette sum
///   phi(j+1,k+1) - phi(j+1,k) - phi(j,k+1) + phi(j,k)
/// over plaquettes whose corners all exceed 1% of the peak magnitude
/// (radians; gauge- and global-phase-invariant). Separable fields give 0.
inline double phase_cross_structure(const ComplexField2D& f) {
  Eigen::MatrixXd mag = f.amp.cwiseAbs();
  double cut = 0.01 * mag.maxCoeff();
  Eigen::MatrixXd phi = f.amp.array().arg();
  double acc = 0.0;
  long count = 0;
  for (int j = 0; j + 1 < f.axis_s.n; ++j)
    for (int k = 0; k + 1 < f.axis_i.n; ++k) {
      if (mag(j, k) < cut || mag(j + 1, k) < cut || mag(j, k + 1) < cut ||
          mag(j + 1, k + 1) < cut)
        continue;
      double d = phi(j + 1, k + 1) - phi(j + 1, k) - phi(j, k + 1) + phi(j, k);
      d = std::remainder(d, 2.0 * std::numbers::pi);
      acc += d * d;
      ++count;
    }
  return count ? std::sqrt(acc / count) : 0.0;
}

}  // namespace biphoton
