#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "biphoton/experiment.hpp"

using namespace biphoton;

namespace {

KernelCache& cache() {
  static KernelCache c;
  return c;
}

double profile_mean(const BeamProfile1D& p) {
  return p.axis.weights().cwiseProduct(p.values).dot(p.axis.samples()) /
         profile_mass(p);
}

}  // namespace

TEST_CASE("grid resolution fills auto entries") {
  OpticalSystem sys = default_paper_system(30.0, 0.9);
  GridSpec g = resolve_grids(sys, GridSpec{});
  CHECK(g.source_s.n == 257);
  CHECK(g.signal_out.n == 1025);
  CHECK(g.signal_lens1.n > 1000);  // criterion-driven quadrature density
  // explicit entries survive
  GridSpec h{};
  h.signal_out = {5.0, 129};
  GridSpec r = resolve_grids(sys, h);
  CHECK(r.signal_out.half_um == 5.0);
  CHECK(r.signal_out.n == 129);
}

TEST_CASE("kernel cache shares compositions") {
  OpticalSystem sys = default_paper_system(30.0, 0.9);
  GridSpec g = resolve_grids(sys, GridSpec{});
  const ArmKernels& a = cache().get(sys.idler_arm, sys.source.lambda_i,
                                    idler_axes(g), "idler");
  const ArmKernels& b = cache().get(sys.idler_arm, sys.source.lambda_i,
                                    idler_axes(g), "idler");
  CHECK(&a == &b);
}

TEST_CASE("paper operating point") {
  OpticalSystem sys = default_paper_system(30.0, 0.9);
  ScenarioResult r = run_scenario(sys, GridSpec{}, DetectorSpec::point(0.0),
                                  &cache());
  CHECK(r.width_h.w_paper_um * 1e3 == doctest::Approx(188.84).epsilon(0.05));
  CHECK(r.width_nh.w_paper_um * 1e3 == doctest::Approx(385.88).epsilon(0.05));
  // convention-independent ratio
  CHECK(r.width_nh.w_paper_um / r.width_h.w_paper_um ==
        doctest::Approx(385.88 / 188.84).epsilon(0.05));
  CHECK(r.slope == doctest::Approx(-2.25e-3).epsilon(0.02));
  CHECK(r.slope_residual < 0.01);
  CHECK(r.transmission_nh >= 0.0);
  CHECK(r.transmission_nh <= 1.0);
  CHECK(r.sigma_mid_um > 0.0);
  CHECK(r.scenario_id == "fs30_rho0.9_pld");
}

TEST_CASE("uncorrelated source: heralding changes nothing") {
  OpticalSystem sys = default_paper_system(30.0, 0.0);
  ScenarioResult r = run_scenario(sys, GridSpec{}, DetectorSpec::point(0.0),
                                  &cache());
  CHECK(r.width_h.w_paper_um ==
        doctest::Approx(r.width_nh.w_paper_um).epsilon(0.01));
  CHECK(std::abs(r.slope) < 1e-5);
}

TEST_CASE("diffraction limit and rerun oracles") {
  OpticalSystem sys = default_paper_system(30.0);
  WidthReport w = diffraction_limit(sys, GridSpec{}, &cache());
  CHECK(w.w_paper_um * 1e3 == doctest::Approx(142.163).epsilon(0.02));
  CHECK(w.fwhm_um == 2.0 * w.w_paper_um);

  // doubled wavelength doubles the aperture-limited spot
  OpticalSystem red = sys;
  red.source.lambda_s = red.source.lambda_i = 1064.0;
  WidthReport w2 = diffraction_limit(red, GridSpec{}, &cache());
  CHECK(w2.w_paper_um / w.w_paper_um == doctest::Approx(2.0).epsilon(0.05));

  // doubled MO aperture narrows the point-spread function
  OpticalSystem big = sys;
  big.signal_arm.r2_mm *= 2.0;
  WidthReport w3 = diffraction_limit(big, GridSpec{}, &cache());
  CHECK(w3.w_paper_um < w.w_paper_um);
}

TEST_CASE("sweep") {
  OpticalSystem base = default_paper_system(30.0);
  SweepRequest req;
  req.points = 3;
  req.rhos = {0.0};
  std::vector<ScenarioResult> rows = sweep(base, GridSpec{}, req, &cache());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].f_s_mm == 30.0);
  CHECK(rows[1].f_s_mm == 90.0);
  CHECK(rows[2].f_s_mm == 150.0);
  // larger f_s -> bigger beam at the MO -> smaller output spot
  CHECK(rows[0].sigma_mid_um < rows[1].sigma_mid_um);
  CHECK(rows[1].sigma_mid_um < rows[2].sigma_mid_um);
  CHECK(rows[0].width_nh.w_paper_um > rows[1].width_nh.w_paper_um);
  CHECK(rows[1].width_nh.w_paper_um > rows[2].width_nh.w_paper_um);
  for (const ScenarioResult& r : rows)
    CHECK(r.width_h.w_paper_um ==
          doctest::Approx(r.width_nh.w_paper_um).epsilon(0.01));

  // deterministic CSV emission
  std::ostringstream a, b;
  write_results_csv(a, rows);
  write_results_csv(b, rows);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("scenario_id,f_s_mm,rho,detector_kind") == 0);

  SweepRequest bad = req;
  bad.rhos.clear();
  CHECK_THROWS_AS(sweep(base, GridSpec{}, bad, &cache()), ConfigError);
  bad = req;
  bad.points = 0;
  CHECK_THROWS_AS(sweep(base, GridSpec{}, bad, &cache()), ConfigError);
}

TEST_CASE("fig2 bundle") {
  OpticalSystem sys = default_paper_system(30.0, 0.9);
  Fig2Bundle b = reproduce_fig2(sys, GridSpec{}, &cache());
  CHECK(b.joint_mass == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(b.contours.empty());
  // heralded profiles are narrower than the non-heralded marginal
  double sig_h = fit_gaussian(b.conditional_0).sigma_um;
  double sig_nh = fit_gaussian(b.marginal_signal).sigma_um;
  CHECK(sig_h < sig_nh);
  // opposite heralding positions displace the conditional symmetrically
  double m_minus = profile_mean(b.conditional_m96);
  double m_plus = profile_mean(conditional_slice(b.joint, 96.0));
  CHECK(m_minus == doctest::Approx(-m_plus).epsilon(1e-3));
  CHECK(m_minus == doctest::Approx(2.25e-3 * 96.0).epsilon(0.02));
}

TEST_CASE("fig4 bundle") {
  OpticalSystem base = default_paper_system(30.0);
  std::vector<Fig4Result> res =
      reproduce_fig4(base, GridSpec{}, {30.0}, 0.9, &cache());
  REQUIRE(res.size() == 1);
  const Fig4Result& r = res[0];
  CHECK(std::abs(r.pearson_mid) < 0.05);
  CHECK(std::abs(r.pearson_out) > 0.5);
  CHECK(r.support_mass_outside_rs < 1e-9);  // hard cut at |x_s'| = R_s
  CHECK(r.mid.axis_s.n <= 322);

  std::vector<Fig4Result> ctl =
      reproduce_fig4(base, GridSpec{}, {30.0}, 0.0, &cache());
  // the mixed phase structure appears only with correlation
  CHECK(r.cross_structure > 10.0 * ctl[0].cross_structure);
  CHECK(ctl[0].cross_structure < 1e-3);
}
