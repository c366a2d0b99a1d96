#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "biphoton/propagation.hpp"

using namespace biphoton;

namespace {

constexpr double kLambda = 0.532;  // um

CVector gaussian_column(const Axis& ax, double sigma_um, double center_um = 0.0) {
  CVector v(ax.n);
  for (int i = 0; i < ax.n; ++i) {
    double x = ax.at(i) - center_um;
    v(i) = std::exp(-x * x / (4.0 * sigma_um * sigma_um));
  }
  return v;
}

double centroid(const Axis& ax, const CVector& amp) {
  RVector I = amp.cwiseAbs2();
  double m = ax.weights().dot(I);
  return ax.weights().cwiseProduct(I).dot(ax.samples()) / m;
}

}  // namespace

TEST_CASE("free-space kernel entries") {
  Axis ax = Axis::symmetric(20.0, 41);
  double d = 1e4;
  LinearKernel1D k = free_space_kernel(ax, ax, d, kLambda);
  RVector w = ax.weights();
  // x_out = x_in: zero phase, entry is the bare weight
  CHECK(k.dense(7, 7).real() == doctest::Approx(w(7)).epsilon(1e-12));
  CHECK(k.dense(7, 7).imag() == doctest::Approx(0.0).epsilon(1e-12));
  // translation covariance: equal offsets give equal phases
  Complex a = k.dense(10, 4) / w(4), b = k.dense(16, 10) / w(10);
  CHECK(std::abs(a - b) < 1e-9);
  // (x_out - x_in)^2 = lambda d: phase -pi
  double sep = std::sqrt(kLambda * d);  // 72.9 um
  Axis wide = Axis::symmetric(80.0, 33);
  LinearKernel1D kw = free_space_kernel(wide, wide, 1e5, kLambda);
  // pick the pair closest to the analytic separation on the coarse grid and
  // verify the phase formula directly instead
  (void)sep;
  for (int j : {0, 5, 20})
    for (int i : {3, 11, 30}) {
      double ph = -std::numbers::pi * std::pow(wide.at(j) - wide.at(i), 2) /
                  (kLambda * 1e5);
      Complex expect = std::polar(wide.weights()(i), ph);
      CHECK(std::abs(kw.dense(j, i) - expect) < 1e-9);
    }
}

TEST_CASE("free-space edge cases") {
  Axis ax = Axis::symmetric(20.0, 41);
  CHECK_THROWS_AS(free_space_kernel(ax, ax, -1.0, kLambda), NumericError);
  // d = 0: identity resampling on a shared axis
  LinearKernel1D id = free_space_kernel(ax, ax, 0.0, kLambda);
  CVector v = gaussian_column(ax, 4.0, 3.0);
  CHECK((id.dense * v - v).cwiseAbs().maxCoeff() < 1e-12);
  // chirp criterion violation names the label
  Axis coarse = Axis::symmetric(2000.0, 17);
  CHECK_THROWS_WITH_AS(
      free_space_kernel(coarse, coarse, 1e4, kLambda, "test plane pair"),
      doctest::Contains("test plane pair"), NumericError);
}

TEST_CASE("lens kernel") {
  Axis ax = Axis::symmetric(100.0, 101);
  double f = 5e4;
  LinearKernel1D k = lens_kernel(ax, f, kLambda);
  REQUIRE(k.is_diagonal);
  CHECK(k.diag(50) == Complex(1.0, 0.0));  // x = 0
  for (int i : {3, 20, 77}) {
    double ph = std::numbers::pi * ax.at(i) * ax.at(i) / (kLambda * f);
    CHECK(std::abs(k.diag(i) - std::polar(1.0, ph)) < 1e-12);
    int mirror = ax.n - 1 - i;
    CHECK(std::abs(k.diag(i) - k.diag(mirror)) < 1e-12);  // even in x
  }
  // x^2 = lambda f: phase +pi
  double xp = std::sqrt(kLambda * f);  // 163 -> use a grid containing it
  Axis ax2{0.0, 2.0 * xp, 33};
  LinearKernel1D k2 = lens_kernel(ax2, f, kLambda);
  CHECK(k2.diag(16).real() == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK_THROWS_AS(lens_kernel(ax, 0.0, kLambda), NumericError);
}

TEST_CASE("aperture kernel") {
  Axis ax = Axis::symmetric(10.0, 21);  // spacing 1, samples on integers
  LinearKernel1D k = aperture_kernel(ax, 4.0);
  for (int i = 0; i < ax.n; ++i)
    CHECK(k.diag(i) == Complex(std::abs(ax.at(i)) <= 4.0 ? 1.0 : 0.0));
  CHECK(k.diag(6) == Complex(1.0));  // |x| = R edge sample passes
  CHECK(k.diag(14) == Complex(1.0));
  // open aperture is the identity; application is idempotent
  LinearKernel1D open = aperture_kernel(ax, 100.0);
  CHECK((open.diag.array() == Complex(1.0)).all());
  LinearKernel1D twice = compose(k, k);
  CHECK((twice.diag - k.diag).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(aperture_kernel(ax, 0.0), NumericError);
}

TEST_CASE("composition is associative") {
  Axis ax = Axis::symmetric(30.0, 65);
  LinearKernel1D f = free_space_kernel(ax, ax, 5e3, kLambda);
  LinearKernel1D l = lens_kernel(ax, 2e4, kLambda);
  LinearKernel1D a = aperture_kernel(ax, 20.0);
  CVector v = gaussian_column(ax, 6.0);
  CVector left = biphoton::apply(compose(compose(f, l), a), v);
  CVector right = biphoton::apply(compose(f, compose(l, a)), v);
  CHECK((left - right).cwiseAbs().maxCoeff() < 1e-12);
  Axis other = Axis::symmetric(10.0, 17);
  LinearKernel1D la = lens_kernel(other, 2e4, kLambda);
  CHECK_THROWS_AS(compose(f, la), NumericError);
}

TEST_CASE("composed arm images the source plane") {
  // d1 = f1, d3 = f2: imaging with magnification -f2/f1 = -0.4
  ArmLayout arm{5.0, 8.0, 2.0, 5.0, 2.0, 1e3, 1e3};  // mm; apertures open
  ArmGridAxes ax{Axis::symmetric(50.0, 129), Axis::symmetric(400.0, 513),
                 Axis::symmetric(800.0, 257), Axis::symmetric(30.0, 257)};
  ArmKernels k = compose_arm(arm, 532.0, ax);
  CHECK(k.mid.axis_out == ax.lens2);
  CHECK(k.full.axis_out == ax.terminal);

  CVector impulse = gaussian_column(ax.source, 3.0, 20.0);
  CVector out = k.full.dense * impulse;
  CHECK(centroid(ax.terminal, out) == doctest::Approx(-8.0).epsilon(0.03));

  ABCDMatrix m = abcd_matrix(arm);
  CHECK(m.b == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(m.a == doctest::Approx(-0.4));
}

TEST_CASE("arm with unit lenses reduces to free space") {
  // f -> infinity, apertures open: the chain is one long free-space hop
  ArmLayout arm{0.3, 0.3, 0.3, 1e9, 1e9, 1e3, 1e3};  // mm
  ArmGridAxes ax{Axis::symmetric(50.0, 257), Axis::symmetric(60.0, 513),
                 Axis::symmetric(60.0, 513), Axis::symmetric(60.0, 257)};
  ArmKernels k = compose_arm(arm, 532.0, ax);
  LinearKernel1D direct =
      free_space_kernel(ax.source, ax.terminal, 900.0, 0.532);
  CVector v = gaussian_column(ax.source, 10.0);
  RVector ia = (k.full.dense * v).cwiseAbs2();
  RVector ib = (direct.dense * v).cwiseAbs2();
  ia /= ia.maxCoeff();
  ib /= ib.maxCoeff();
  CHECK((ia - ib).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("arm criterion violations name the plane") {
  ArmLayout arm{5.0, 8.0, 2.0, 5.0, 2.0, 1e3, 1e3};
  ArmGridAxes ax{Axis::symmetric(50.0, 129), Axis::symmetric(400.0, 17),
                 Axis::symmetric(800.0, 257), Axis::symmetric(30.0, 257)};
  CHECK_THROWS_WITH_AS(compose_arm(arm, 532.0, ax, "signal"),
                       doctest::Contains("signal lens-1"), NumericError);
}

TEST_CASE("abcd matrices") {
  ABCDMatrix f = ABCDMatrix::free_space(123.0);
  CHECK(f.a == 1.0);
  CHECK(f.b == 123.0);
  CHECK(f.c == 0.0);
  OpticalSystem sys = default_paper_system(30.0);
  ABCDMatrix ms = abcd_matrix(sys.signal_arm);
  CHECK(ms.b == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ms.a == doctest::Approx(-2.5 / 30.0));
  ABCDMatrix mi = abcd_matrix(sys.idler_arm);
  CHECK(mi.a == doctest::Approx(-1000.0 / 30.0));  // magnification -33.33
  CHECK(ms.det() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mi.det() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gaussian oracle") {
  OpticalSystem sys = default_paper_system(30.0, 0.9);
  GaussianOracle g = gaussian_oracle(sys);
  CHECK(g.slope == doctest::Approx(-2.25e-3).epsilon(1e-9));
  sys.source.rho = 0.0;
  CHECK(gaussian_oracle(sys).slope == 0.0);
  sys.source.rho = 0.9;
  sys.source.delta_i *= 2.0;
  CHECK(gaussian_oracle(sys).slope == doctest::Approx(-4.5e-3).epsilon(1e-9));
}

TEST_CASE("joint propagation") {
  Axis ax = Axis::symmetric(20.0, 33);
  ComplexField2D f{ax, ax, CMatrix(ax.n, ax.n)};
  for (int j = 0; j < ax.n; ++j)
    for (int k = 0; k < ax.n; ++k)
      f.amp(j, k) = std::exp(-(ax.at(j) * ax.at(j) + ax.at(k) * ax.at(k)) / 50.0);
  LinearKernel1D id = free_space_kernel(ax, ax, 0.0, kLambda);
  ComplexField2D out = propagate(f, id, id);
  CHECK((out.amp - f.amp).cwiseAbs().maxCoeff() < 1e-12);

  // conjugating kernels and input leaves probabilities untouched
  LinearKernel1D ks = free_space_kernel(ax, ax, 2e3, kLambda);
  ComplexField2D fwd = propagate(f, ks, ks);
  LinearKernel1D conj = ks;
  conj.dense = conj.dense.conjugate();
  ComplexField2D cf = f;
  cf.amp = cf.amp.conjugate();
  ComplexField2D bwd = propagate(cf, conj, conj);
  CHECK((fwd.amp.cwiseAbs2() - bwd.amp.cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-12);

  Axis small = Axis::symmetric(20.0, 17);
  LinearKernel1D bad = free_space_kernel(small, small, 2e3, kLambda);
  CHECK_THROWS_AS(propagate(f, bad, ks), NumericError);
}
