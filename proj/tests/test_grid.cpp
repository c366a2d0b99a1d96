#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "biphoton/grid.hpp"

using namespace biphoton;

namespace {

ComplexField2D gaussian_field(double sig_s, double sig_i, double shift_s = 0.0) {
  Axis as = Axis::symmetric(8.0, 161), ai = Axis::symmetric(8.0, 161);
  ComplexField2D f{as, ai, CMatrix(as.n, ai.n)};
  for (int j = 0; j < as.n; ++j)
    for (int k = 0; k < ai.n; ++k) {
      double xs = as.at(j) - shift_s, xi = ai.at(k);
      f.amp(j, k) = std::exp(-xs * xs / (4 * sig_s * sig_s) -
                             xi * xi / (4 * sig_i * sig_i));
    }
  return f;
}

}  // namespace

TEST_CASE("axis basics") {
  Axis a = Axis::symmetric(10.0, 21);
  CHECK(a.spacing() == doctest::Approx(1.0));
  CHECK(a.at(0) == -10.0);
  CHECK(a.at(20) == 10.0);
  CHECK(a.weights().sum() == doctest::Approx(20.0));
  CHECK(a.contains(0.0));
  CHECK_FALSE(a.contains(10.5));
  CHECK_THROWS_AS(Axis::symmetric(10.0, 8), ConfigError);
  CHECK_THROWS_AS(Axis::symmetric(-1.0, 32), ConfigError);
}

TEST_CASE("norm_squared scaling") {
  ComplexField2D f = gaussian_field(1.0, 1.5);
  double n = norm_squared(f);
  CHECK(n > 0);
  ComplexField2D z = f;
  z.amp.setZero();
  CHECK(norm_squared(z) == 0.0);
  ComplexField2D d = f;
  d.amp *= 2.0;
  CHECK(norm_squared(d) == doctest::Approx(4.0 * n));
}

TEST_CASE("normalize") {
  ComplexField2D f = gaussian_field(1.0, 1.0);
  ComplexField2D n = normalize(f);
  CHECK(norm_squared(n) == doctest::Approx(1.0).epsilon(1e-9));
  ComplexField2D nn = normalize(n);
  CHECK((nn.amp - n.amp).cwiseAbs().maxCoeff() < 1e-12);
  ComplexField2D z = f;
  z.amp.setZero();
  CHECK_THROWS_AS(normalize(z), NumericError);
}

TEST_CASE("intensity moments") {
  ComplexField2D f = normalize(gaussian_field(1.0, 1.5));
  IntensityMoments m = intensity_moments(f);
  CHECK(m.mean_s == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(m.mean_i == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(m.cov_si == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(m.var_s == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(m.var_i == doctest::Approx(2.25).epsilon(1e-4));

  // translation shifts the mean by the same amount
  IntensityMoments ms = intensity_moments(normalize(gaussian_field(1.0, 1.5, 0.7)));
  CHECK(ms.mean_s - m.mean_s == doctest::Approx(0.7).epsilon(1e-6));

  // invariance under global phase and conjugation
  ComplexField2D rot = f;
  rot.amp *= std::polar(1.0, 1.234);
  IntensityMoments mr = intensity_moments(rot);
  CHECK(mr.var_s == doctest::Approx(m.var_s).epsilon(1e-12));
  ComplexField2D conj = f;
  conj.amp = conj.amp.conjugate();
  CHECK(norm_squared(conj) == doctest::Approx(norm_squared(f)).epsilon(1e-12));
  CHECK(intensity_moments(conj).cov_si == doctest::Approx(m.cov_si).epsilon(1e-12));
}

TEST_CASE("profile helpers") {
  Axis a = Axis::symmetric(5.0, 101);
  BeamProfile1D p{a, RVector(a.n)};
  for (int i = 0; i < a.n; ++i)
    p.values(i) = std::exp(-a.at(i) * a.at(i));
  BeamProfile1D n = normalized(p);
  CHECK(profile_mass(n) == doctest::Approx(1.0).epsilon(1e-9));
  p.values.setZero();
  CHECK_THROWS_AS(normalized(p), NumericError);
}

TEST_CASE("csv exports") {
  Axis a = Axis::symmetric(1.0, 17);
  BeamProfile1D p{a, RVector::Ones(a.n)};
  std::ostringstream os;
  write_profile_csv(os, p, "meta line");
  std::string out = os.str();
  CHECK(out.find("# meta line") == 0);
  CHECK(out.find("x_um,density_per_um") != std::string::npos);

  ComplexField2D f{a, a, CMatrix::Ones(a.n, a.n)};
  std::ostringstream os2;
  write_intensity_csv(os2, f);
  CHECK(os2.str().find("x_s_um,x_i_um,density") == 0);
  std::ostringstream os3;
  write_field_dump(os3, f);
  CHECK(os3.str().find("# axis_s_um:") == 0);
}
