#pragma once

// Discretized one-dimensional propagation operators and their composition
// into per-arm kernels.
//
// Free space over distance d multiplies by exp(-i pi (x'-x)^2/(lambda d))
// under the integral; a thin lens of focal length f is the pointwise phase
// exp(+i pi x^2/(lambda f)); an aperture of radius R is the hard mask
// |x| <= R. No amplitude prefactors are carried: every observable downstream
// is a ratio of norms or a normalized density.
//
// Dense kernels fold the trapezoid weights of their input axis, so operator
// composition is plain matrix multiplication. Chirped kernels are only valid
// when the integrand phase advances by at most pi between adjacent samples of
// the quadrature plane; violations are hard errors.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "biphoton/config.hpp"
#include "biphoton/grid.hpp"

namespace biphoton {

struct LinearKernel1D {
  Axis axis_in, axis_out;
  bool is_diagonal = false;
  CMatrix dense;  // n_out x n_in, input weights folded (empty when diagonal)
  CVector diag;   // pointwise factors (empty when dense)
};

namespace detail {

constexpr double kPi = std::numbers::pi;

/// Writes exp(i(alpha + beta k + gamma k^2)), k = 0..n-1, into dst with a
/// double-rotator recurrence, re-synchronized every 256 samples.
inline void chirp_fill(Complex* dst, int n, double alpha, double beta, double gamma) {
  const Complex step = std::polar(1.0, 2.0 * gamma);
  Complex z, r;
  for (int k = 0; k < n; ++k) {
    if ((k & 255) == 0) {
      z = std::polar(1.0, alpha + (beta + gamma * k) * k);
      r = std::polar(1.0, beta + gamma * (2.0 * k + 1.0));
    }
    dst[k] = z;
    z *= r;
    r *= step;
  }
}

/// Fills block(j,k) = exp(-i pi (xo_j - xi_k)^2 / (lambda d)) for the given
/// index windows. Column-contiguous fill (quadratic phase along rows).
inline void fill_free_block(CMatrix& block, const Axis& axis_out, int out0,
                            const Axis& axis_in, int in0, double d_um,
                            double lambda_um) {
  const int rows = static_cast<int>(block.rows());
  const int cols = static_cast<int>(block.cols());
  const double q = -kPi / (lambda_um * d_um);
  const double dxo = axis_out.spacing();
  for (int k = 0; k < cols; ++k) {
    // phase over j: q * (xo0 + j*dxo - xi_k)^2
    const double c = axis_out.at(out0) - axis_in.at(in0 + k);
    chirp_fill(block.col(k).data(), rows, q * c * c, 2.0 * q * c * dxo,
               q * dxo * dxo);
  }
}

/// Linear-interpolation resampling matrix (the d = 0 "propagator").
inline CMatrix resample_matrix(const Axis& axis_out, const Axis& axis_in) {
  CMatrix m = CMatrix::Zero(axis_out.n, axis_in.n);
  for (int j = 0; j < axis_out.n; ++j) {
    double x = axis_out.at(j);
    if (!axis_in.contains(x)) continue;
    double t = (x - axis_in.min_um) / axis_in.spacing();
    int k = std::min(static_cast<int>(t), axis_in.n - 2);
    double w = t - k;
    m(j, k) = 1.0 - w;
    m(j, k + 1) = w;
  }
  return m;
}

inline void require_criterion(double spacing_um, double max_spacing_um,
                              const std::string& what) {
  if (spacing_um > max_spacing_um) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  ": spacing %.4g um exceeds the admissible %.4g um",
                  spacing_um, max_spacing_um);
    throw NumericError("sampling criterion violated at " + what + buf);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Free-space kernel over distance d (um). d = 0 yields the resampling
/// identity. The input spacing must satisfy the chirp criterion
/// dx_in <= lambda d / (2 (|x_out|max + |x_in|max)).
inline LinearKernel1D free_space_kernel(const Axis& axis_in, const Axis& axis_out,
                                        double d_um, double lambda_um,
                                        const std::string& label = "free-space plane pair") {
  if (d_um < 0) throw NumericError("negative propagation distance");
  LinearKernel1D k{axis_in, axis_out, false, {}, {}};
  if (d_um == 0) {
    k.dense = detail::resample_matrix(axis_out, axis_in);
    return k;
  }
  double reach = std::max(std::abs(axis_out.min_um), axis_out.max_um) +
                 std::max(std::abs(axis_in.min_um), axis_in.max_um);
  detail::require_criterion(axis_in.spacing(), lambda_um * d_um / (2.0 * reach), label);
  k.dense.resize(axis_out.n, axis_in.n);
  detail::fill_free_block(k.dense, axis_out, 0, axis_in, 0, d_um, lambda_um);
  k.dense *= axis_in.weights().asDiagonal();
  return k;
}

/// Thin-lens phase exp(+i pi x^2/(lambda f)), diagonal, no weights.
inline LinearKernel1D lens_kernel(const Axis& axis, double f_um, double lambda_um) {
  if (f_um == 0) throw NumericError("zero focal length");
  LinearKernel1D k{axis, axis, true, {}, CVector(axis.n)};
  const double q = detail::kPi / (lambda_um * f_um);
  for (int i = 0; i < axis.n; ++i) {
    double x = axis.at(i);
    k.diag(i) = std::polar(1.0, q * x * x);
  }
  return k;
}

/// Hard aperture: 1 for |x| <= R (edge samples included), else 0.
inline LinearKernel1D aperture_kernel(const Axis& axis, double radius_um) {
  if (radius_um <= 0) throw NumericError("aperture radius must be > 0");
  LinearKernel1D k{axis, axis, true, {}, CVector(axis.n)};
  for (int i = 0; i < axis.n; ++i)
    k.diag(i) = (std::abs(axis.at(i)) <= radius_um) ? 1.0 : 0.0;
  return k;
}

/// Generic composition b after a (matrix product over the shared plane).
inline LinearKernel1D compose(const LinearKernel1D& after, const LinearKernel1D& before) {
  if (!(after.axis_in == before.axis_out))
    throw NumericError("kernel composition: axis mismatch at the shared plane");
  LinearKernel1D k{before.axis_in, after.axis_out, false, {}, {}};
  if (after.is_diagonal && before.is_diagonal) {
    k.is_diagonal = true;
    k.diag = after.diag.cwiseProduct(before.diag);
  } else if (after.is_diagonal) {
    k.dense = after.diag.asDiagonal() * before.dense;
  } else if (before.is_diagonal) {
    k.dense = after.dense * before.diag.asDiagonal();
  } else {
    k.dense = after.dense * before.dense;
  }
  return k;
}

inline CMatrix apply(const LinearKernel1D& k, const CMatrix& columns) {
  return k.is_diagonal ? CMatrix(k.diag.asDiagonal() * columns)
                       : CMatrix(k.dense * columns);
}

// ---------------------------------------------------------------------------
// Ray-transfer (ABCD) oracle for the aperture-free limit.

struct ABCDMatrix {
  double a = 1, b = 0, c = 0, d = 1; // b in um, c in 1/um

  ABCDMatrix operator*(const ABCDMatrix& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d,
            c * o.a + d * o.c, c * o.b + d * o.d};
  }
  double det() const { return a * d - b * c; }
  static ABCDMatrix free_space(double d_um) { return {1, d_um, 0, 1}; }
  static ABCDMatrix lens(double f_um) { return {1, 0, -1.0 / f_um, 1}; }
};

/// F(d3) L(f2) F(d2) L(f1) F(d1) for the arm, in micrometer units.
inline ABCDMatrix abcd_matrix(const ArmLayout& arm) {
  const double mm = 1e3;
  return ABCDMatrix::free_space(arm.d3_mm * mm) * ABCDMatrix::lens(arm.f2_mm * mm) *
         ABCDMatrix::free_space(arm.d2_mm * mm) * ABCDMatrix::lens(arm.f1_mm * mm) *
         ABCDMatrix::free_space(arm.d1_mm * mm);
}

struct GaussianOracle {
  Eigen::Matrix2d cov_out;   // joint output intensity covariance, um^2
  double slope;              // conditional centroid slope d<x_s>/dx_i
  double sigma_s, sigma_i;   // marginal widths, um
};

/// Propagates the source intensity covariance through both arms' ABCD
/// matrices, ignoring apertures. The angular spread per photon follows from
/// the momentum-space widths delta/(sqrt(1-rho^2)); position-angle cross
/// terms vanish for the real source amplitude.
inline GaussianOracle gaussian_oracle(const OpticalSystem& sys) {
  const SourceParams& p = sys.source;
  const double ls = p.lambda_s * 1e-3, li = p.lambda_i * 1e-3; // um
  const double inv = 1.0 / (1.0 - p.rho * p.rho);
  const double twoPi = 2.0 * detail::kPi;

  double var_xs = 1.0 / (4.0 * p.delta_s * p.delta_s);
  double var_xi = 1.0 / (4.0 * p.delta_i * p.delta_i);
  double cov_x = -p.rho / (4.0 * p.delta_s * p.delta_i);
  double var_ts = std::pow(ls * p.delta_s / twoPi, 2) * inv;
  double var_ti = std::pow(li * p.delta_i / twoPi, 2) * inv;
  double cov_t = (ls * li * p.delta_s * p.delta_i / (twoPi * twoPi)) * p.rho * inv;

  ABCDMatrix ms = abcd_matrix(sys.signal_arm), mi = abcd_matrix(sys.idler_arm);
  GaussianOracle g{};
  g.cov_out(0, 0) = ms.a * ms.a * var_xs + ms.b * ms.b * var_ts;
  g.cov_out(1, 1) = mi.a * mi.a * var_xi + mi.b * mi.b * var_ti;
  g.cov_out(0, 1) = g.cov_out(1, 0) = ms.a * mi.a * cov_x + ms.b * mi.b * cov_t;
  g.slope = g.cov_out(0, 1) / g.cov_out(1, 1);
  g.sigma_s = std::sqrt(g.cov_out(0, 0));
  g.sigma_i = std::sqrt(g.cov_out(1, 1));
  return g;
}

// ---------------------------------------------------------------------------
// Per-arm composition.

struct ArmGridAxes {
  Axis source, lens1, lens2, terminal;
};

inline ArmGridAxes make_axes(const PlaneGrid& src, const PlaneGrid& l1,
                             const PlaneGrid& l2, const PlaneGrid& out) {
  return ArmGridAxes{Axis::symmetric(src.half_um, src.n),
                     Axis::symmetric(l1.half_um, l1.n),
                     Axis::symmetric(l2.half_um, l2.n),
                     Axis::symmetric(out.half_um, out.n)};
}

struct ArmKernels {
  LinearKernel1D mid;   // source -> just before lens 2 (aperture 1 applied)
  LinearKernel1D full;  // source -> terminal plane (both apertures applied)
};

/// Composes F(d3) A(r2) L(f2) F(d2) A(r1) L(f1) F(d1) into the two arm
/// kernels. Quadratures run over the lens planes; the chirp criterion is
/// checked on the net integrand phase there (free-space chirps on both sides
/// plus the lens phase), which is what the trapezoid rule actually sees once
/// the diagonal factors are folded in.
inline ArmKernels compose_arm(const ArmLayout& arm, double lambda_nm,
                              const ArmGridAxes& ax,
                              const std::string& label = "arm") {
  const double mm = 1e3;
  const double lam = lambda_nm * 1e-3;
  const double d1 = arm.d1_mm * mm, d2 = arm.d2_mm * mm, d3 = arm.d3_mm * mm;
  const double f1 = arm.f1_mm * mm, f2 = arm.f2_mm * mm;
  const double r1 = arm.r1_mm * mm, r2 = arm.r2_mm * mm;
  const double x0m = ax.source.max_um, x1m = ax.lens1.max_um;
  const double x2m = ax.lens2.max_um, x3m = ax.terminal.max_um;

  // Source-plane spacing against the first chirp.
  if (d1 > 0)
    detail::require_criterion(ax.source.spacing(),
                              lam * d1 / (2.0 * (x0m + x1m)),
                              label + " source plane (into lens-1 plane)");

  // Net chirp of the lens-1 quadrature.
  {
    double c2 = (d1 > 0 ? 1.0 / d1 : 0.0) + (d2 > 0 ? 1.0 / d2 : 0.0) - 1.0 / f1;
    double rate = std::abs(c2) * x1m + (d2 > 0 ? x2m / d2 : 0.0) +
                  (d1 > 0 ? x0m / d1 : 0.0);
    if (rate > 0)
      detail::require_criterion(ax.lens1.spacing(), lam / (2.0 * rate),
                                label + " lens-1 plane (source->lens-2 quadrature)");
  }

  // Lens-2 quadrature: the composed source->lens-2 kernel is smooth at the
  // stationary-phase rate set by its ABCD chain; the downstream side carries
  // the folded F(d3) L(f2) chirp.
  {
    ABCDMatrix m_mid = ABCDMatrix::free_space(d2) * ABCDMatrix::lens(f1) *
                       ABCDMatrix::free_space(d1);
    double up_rate; // |dphi/dx| / (2 pi / lambda) on the lens-2 plane
    if (std::abs(m_mid.b) > 1e-9 * mm)
      up_rate = (std::abs(m_mid.d) * x2m + x0m) / std::abs(m_mid.b);
    else if (d2 > 0)
      up_rate = (x1m + x2m) / d2; // imaging chain: fall back to the raw chirp
    else
      up_rate = 0.0;
    double down_rate =
        d3 > 0 ? std::abs(1.0 / d3 - 1.0 / f2) * x2m + x3m / d3 : 0.0;
    if (up_rate + down_rate > 0)
      detail::require_criterion(ax.lens2.spacing(), lam / (2.0 * (up_rate + down_rate)),
                                label + " lens-2 plane (lens-1->terminal quadrature)");
  }

  // Pointwise factors on the lens planes (aperture * lens * quadrature weight).
  CVector g1(ax.lens1.n);
  {
    RVector w1 = ax.lens1.weights();
    for (int i = 0; i < ax.lens1.n; ++i) {
      double x = ax.lens1.at(i);
      g1(i) = (std::abs(x) <= r1)
                  ? std::polar(w1(i), detail::kPi * x * x / (lam * f1))
                  : Complex(0.0);
    }
  }

  ArmKernels out;
  out.mid = LinearKernel1D{ax.source, ax.lens2, false, {}, {}};
  out.mid.dense = CMatrix::Zero(ax.lens2.n, ax.source.n);
  RVector w0 = ax.source.weights();

  const int tile = 8192;
  CMatrix f2blk, f1blk;
  for (int b = 0; b < ax.lens1.n; b += tile) {
    int nb = std::min(tile, ax.lens1.n - b);
    f2blk.resize(ax.lens2.n, nb);
    if (d2 > 0)
      detail::fill_free_block(f2blk, ax.lens2, 0, ax.lens1, b, d2, lam);
    else
      f2blk = detail::resample_matrix(ax.lens2, ax.lens1).middleCols(b, nb);
    f2blk *= g1.segment(b, nb).asDiagonal();
    f1blk.resize(nb, ax.source.n);
    if (d1 > 0) {
      // block rows live on the lens-1 plane; fill transposed then adopt
      CMatrix t(ax.source.n, nb);
      detail::fill_free_block(t, ax.source, 0, ax.lens1, b, d1, lam);
      f1blk = t.transpose();
    } else {
      f1blk = detail::resample_matrix(ax.lens1, ax.source).middleRows(b, nb);
    }
    f1blk *= w0.asDiagonal();
    out.mid.dense.noalias() += f2blk * f1blk;
  }

  // Terminal stage: F(d3) with aperture-2, lens-2 and the lens-2 plane
  // weights folded into its columns.
  CVector g2(ax.lens2.n);
  {
    RVector w2 = ax.lens2.weights();
    for (int i = 0; i < ax.lens2.n; ++i) {
      double x = ax.lens2.at(i);
      g2(i) = (std::abs(x) <= r2)
                  ? std::polar(w2(i), detail::kPi * x * x / (lam * f2))
                  : Complex(0.0);
    }
  }
  CMatrix f3(ax.terminal.n, ax.lens2.n);
  if (d3 > 0)
    detail::fill_free_block(f3, ax.terminal, 0, ax.lens2, 0, d3, lam);
  else {
    f3 = detail::resample_matrix(ax.terminal, ax.lens2);
    // resampling carries no quadrature: drop the folded weights again
    RVector w2 = ax.lens2.weights();
    g2 = g2.cwiseQuotient(w2.cast<Complex>());
  }
  out.full = LinearKernel1D{ax.source, ax.terminal, false, {}, {}};
  out.full.dense.noalias() = (f3 * g2.asDiagonal()) * out.mid.dense;
  return out;
}

/// Joint-field propagation: amp_out = K_s amp K_i^T. No normalization.
inline ComplexField2D propagate(const ComplexField2D& field,
                                const LinearKernel1D& k_s,
                                const LinearKernel1D& k_i) {
  if (!(k_s.axis_in == field.axis_s) || !(k_i.axis_in == field.axis_i))
    throw NumericError("propagate: field axes do not match kernel input axes");
  ComplexField2D out{k_s.axis_out, k_i.axis_out, {}};
  CMatrix left = apply(k_s, field.amp);
  if (k_i.is_diagonal)
    out.amp = left * k_i.diag.asDiagonal();
  else
    out.amp = left * k_i.dense.transpose();
  return out;
}

}  // namespace biphoton
