#pragma once

// Sampled fields on uniform 1D/2D grids. Positions are micrometers
// throughout; joint amplitudes live on (signal axis) x (idler axis).

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <ostream>
#include <sstream>
#include <string>

#include "biphoton/errors.hpp"

namespace biphoton {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

struct Axis {
  double min_um = 0, max_um = 0;
  int n = 0;

  static Axis symmetric(double half_um, int n) {
    if (n < 16) throw ConfigError("axis sample count must be >= 16");
    if (half_um <= 0) throw ConfigError("axis half extent must be > 0");
    return Axis{-half_um, half_um, n};
  }
  double spacing() const { return (max_um - min_um) / (n - 1); }
  double at(int i) const { return min_um + i * spacing(); }
  RVector samples() const { return RVector::LinSpaced(n, min_um, max_um); }
  /// Trapezoid quadrature weights.
  RVector weights() const {
    RVector w = RVector::Constant(n, spacing());
    w(0) *= 0.5;
    w(n - 1) *= 0.5;
    return w;
  }
  bool contains(double x) const { return x >= min_um && x <= max_um; }
  bool operator==(const Axis& o) const {
    return min_um == o.min_um && max_um == o.max_um && n == o.n;
  }
};

struct ComplexField2D {
  Axis axis_s, axis_i;
  CMatrix amp; // axis_s.n rows x axis_i.n cols
};

struct BeamProfile1D {
  Axis axis;
  RVector values; // probability density per um
};

// ---------------------------------------------------------------------------

inline double norm_squared(const ComplexField2D& f) {
  RVector ws = f.axis_s.weights(), wi = f.axis_i.weights();
  return (ws.transpose() * f.amp.cwiseAbs2() * wi).value();
}

inline ComplexField2D normalize(const ComplexField2D& f) {
  double n2 = norm_squared(f);
  if (!(n2 > 0))
    throw NumericError("cannot normalize a field with zero norm");
  ComplexField2D out = f;
  out.amp /= std::sqrt(n2);
  return out;
}

struct IntensityMoments {
  double mean_s, mean_i, var_s, var_i, cov_si;
};

/// First and second moments of |amp|^2 treated as a joint density.
inline IntensityMoments intensity_moments(const ComplexField2D& f) {
  RVector ws = f.axis_s.weights().cwiseProduct(RVector::Ones(f.axis_s.n));
  RVector wi = f.axis_i.weights();
  Eigen::MatrixXd I = f.amp.cwiseAbs2();
  RVector xs = f.axis_s.samples(), xi = f.axis_i.samples();
  double mass = (ws.transpose() * I * wi).value();
  if (!(mass > 0)) throw NumericError("zero-mass field has no moments");
  RVector ps = (I * wi).cwiseProduct(ws) / mass;     // signal marginal masses
  RVector pi = (I.transpose() * ws).cwiseProduct(wi) / mass;
  IntensityMoments m{};
  m.mean_s = ps.dot(xs);
  m.mean_i = pi.dot(xi);
  m.var_s = ps.dot((xs.array() - m.mean_s).square().matrix());
  m.var_i = pi.dot((xi.array() - m.mean_i).square().matrix());
  m.cov_si = ((ws.cwiseProduct((xs.array() - m.mean_s).matrix())).transpose() * I *
              (wi.cwiseProduct((xi.array() - m.mean_i).matrix()))).value() / mass;
  return m;
}

inline double profile_mass(const BeamProfile1D& p) {
  return p.axis.weights().dot(p.values);
}

inline BeamProfile1D normalized(BeamProfile1D p) {
  double m = profile_mass(p);
  if (!(m > 0)) throw NumericError("cannot normalize a zero-mass profile");
  p.values /= m;
  return p;
}

// ---------------------------------------------------------------------------
// Plain-text exports. 9 significant digits, comma separated.

inline void write_profile_csv(std::ostream& os, const BeamProfile1D& p,
                              const std::string& meta = "") {
  if (!meta.empty()) {
    std::istringstream in(meta);
    std::string l;
    while (std::getline(in, l)) os << "# " << l << "\n";
  }
  os << "x_um,density_per_um\n";
  char buf[96];
  for (int i = 0; i < p.axis.n; ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", p.axis.at(i), p.values(i));
    os << buf;
  }
}

inline void write_intensity_csv(std::ostream& os, const ComplexField2D& f) {
  os << "x_s_um,x_i_um,density\n";
  char buf[128];
  for (int j = 0; j < f.axis_s.n; ++j)
    for (int k = 0; k < f.axis_i.n; ++k) {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", f.axis_s.at(j),
                    f.axis_i.at(k), std::norm(f.amp(j, k)));
      os << buf;
    }
}

/// Full complex dump: axis headers then rows of re,im pairs.
inline void write_field_dump(std::ostream& os, const ComplexField2D& f) {
  char buf[64];
  os << "# axis_s_um:";
  for (int j = 0; j < f.axis_s.n; ++j) {
    std::snprintf(buf, sizeof buf, " %.9g", f.axis_s.at(j));
    os << buf;
  }
  os << "\n# axis_i_um:";
  for (int k = 0; k < f.axis_i.n; ++k) {
    std::snprintf(buf, sizeof buf, " %.9g", f.axis_i.at(k));
    os << buf;
  }
  os << "\n";
  for (int j = 0; j < f.axis_s.n; ++j) {
    for (int k = 0; k < f.axis_i.n; ++k) {
      std::snprintf(buf, sizeof buf, "%s%.9g,%.9g", k ? " " : "",
                    f.amp(j, k).real(), f.amp(j, k).imag());
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace biphoton
