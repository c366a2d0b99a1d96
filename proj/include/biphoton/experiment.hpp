#pragma once

// Scenario orchestration: compose arm kernels (cached), propagate the source
// field, and collect every headline observable. Also the delta-impulse
// diffraction limit, the f_s sweep, and the figure-style data bundles.

#include <map>
#include <string>
#include <vector>

#include "biphoton/analysis.hpp"
#include "biphoton/config.hpp"
#include "biphoton/propagation.hpp"
#include "biphoton/source.hpp"

namespace biphoton {

// ---------------------------------------------------------------------------
// Grid resolution: a sample count of 0 requests auto-sizing (criterion-based
// at the lens-1 planes, library defaults elsewhere).

inline GridSpec resolve_grids(const OpticalSystem& sys, GridSpec g) {
  GridSpec d = default_grids(sys);
  auto fill = [](PlaneGrid& p, const PlaneGrid& def) {
    if (p.half_um <= 0) p.half_um = def.half_um;
    if (p.n == 0) p.n = def.n;
  };
  fill(g.source_s, d.source_s);
  fill(g.source_i, d.source_i);
  // auto lens-1 counts depend on the (possibly overridden) extents
  if (g.signal_lens1.half_um <= 0) g.signal_lens1.half_um = d.signal_lens1.half_um;
  if (g.signal_lens2.half_um <= 0) g.signal_lens2.half_um = d.signal_lens2.half_um;
  if (g.signal_lens1.n == 0)
    g.signal_lens1.n = detail::auto_lens1_samples(
        sys.signal_arm, sys.source.lambda_s, g.source_s.half_um,
        g.signal_lens1.half_um, g.signal_lens2.half_um);
  if (g.signal_lens2.n == 0) g.signal_lens2.n = d.signal_lens2.n;
  fill(g.signal_out, d.signal_out);
  if (g.idler_lens1.half_um <= 0) g.idler_lens1.half_um = d.idler_lens1.half_um;
  if (g.idler_lens2.half_um <= 0) g.idler_lens2.half_um = d.idler_lens2.half_um;
  if (g.idler_lens1.n == 0)
    g.idler_lens1.n = detail::auto_lens1_samples(
        sys.idler_arm, sys.source.lambda_i, g.source_i.half_um,
        g.idler_lens1.half_um, g.idler_lens2.half_um);
  if (g.idler_lens2.n == 0) g.idler_lens2.n = d.idler_lens2.n;
  fill(g.idler_out, d.idler_out);
  return g;
}

inline ArmGridAxes signal_axes(const GridSpec& g) {
  return make_axes(g.source_s, g.signal_lens1, g.signal_lens2, g.signal_out);
}
inline ArmGridAxes idler_axes(const GridSpec& g) {
  return make_axes(g.source_i, g.idler_lens1, g.idler_lens2, g.idler_out);
}

// ---------------------------------------------------------------------------
// Composed kernels are the expensive artifact; cache them per
// (arm, wavelength, axes). The idler arm is constant across an f_s sweep, so
// its composition is paid once.

class KernelCache {
 public:
  const ArmKernels& get(const ArmLayout& arm, double lambda_nm,
                        const ArmGridAxes& ax, const std::string& label) {
    std::string key = label;
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "|%.17g %.17g %.17g %.17g %.17g %.17g %.17g|%.17g|"
                  "%.17g %d %.17g %d %.17g %d %.17g %d",
                  arm.d1_mm, arm.d2_mm, arm.d3_mm, arm.f1_mm, arm.f2_mm,
                  arm.r1_mm, arm.r2_mm, lambda_nm, ax.source.max_um,
                  ax.source.n, ax.lens1.max_um, ax.lens1.n, ax.lens2.max_um,
                  ax.lens2.n, ax.terminal.max_um, ax.terminal.n);
    key += buf;
    auto it = cache_.find(key);
    if (it == cache_.end())
      it = cache_.emplace(key, compose_arm(arm, lambda_nm, ax, label)).first;
    return it->second;
  }

 private:
  std::map<std::string, ArmKernels> cache_;
};

// ---------------------------------------------------------------------------

struct ScenarioFields {
  ComplexField2D mid;  // signal at the MO plane x idler at its detector
  ComplexField2D out;  // both photons at their terminal planes, normalized
};

/// psi_in -> (psi_mid, psi_out) for a resolved grid spec.
inline ScenarioFields compute_fields(const OpticalSystem& sys, const GridSpec& grids,
                                     KernelCache& kc) {
  const ArmKernels& ks = kc.get(sys.signal_arm, sys.source.lambda_s,
                                signal_axes(grids), "signal");
  const ArmKernels& ki = kc.get(sys.idler_arm, sys.source.lambda_i,
                                idler_axes(grids), "idler");
  ComplexField2D psi_in = position_wavefunction(
      sys.source, Axis::symmetric(grids.source_s.half_um, grids.source_s.n),
      Axis::symmetric(grids.source_i.half_um, grids.source_i.n));
  ScenarioFields f;
  f.mid = propagate(psi_in, ks.mid, ki.full);
  f.out = normalize(propagate(psi_in, ks.full, ki.full));
  return f;
}

struct ScenarioResult {
  std::string scenario_id;
  double f_s_mm = 0;
  double rho = 0;
  DetectorSpec detector;
  double sigma_mid_um = 0;        // 99% iris radius at the MO plane
  WidthReport width_nh, width_h;  // non-heralded / heralded output widths
  double fit_residual_nh = 0, fit_residual_h = 0;
  double transmission_nh = 0, transmission_h = 0;
  double slope = 0, slope_residual = 0;
};

inline std::vector<double> default_herald_positions() {
  return {-96.0, -48.0, 0.0, 48.0, 96.0};
}

/// Full pipeline for one configuration: psi_in -> psi_mid -> psi_out, then
/// iris radius, widths (heralded and not), transmissions and the centroid
/// slope over the default heralding positions.
inline ScenarioResult run_scenario(const OpticalSystem& sys, const GridSpec& grids_in,
                                   const DetectorSpec& detector,
                                   KernelCache* cache = nullptr) {
  validate_or_throw(sys);
  GridSpec grids = resolve_grids(sys, grids_in);
  KernelCache local;
  KernelCache& kc = cache ? *cache : local;
  ScenarioFields fields = compute_fields(sys, grids, kc);
  const ComplexField2D& psi_mid = fields.mid;
  const ComplexField2D& psi_out = fields.out;

  ScenarioResult r;
  r.f_s_mm = sys.signal_arm.f1_mm;
  r.rho = sys.source.rho;
  r.detector = detector;
  {
    char buf[96];
    std::snprintf(buf, sizeof buf, "fs%g_rho%g_%s", r.f_s_mm, r.rho,
                  detector.kind == DetectorSpec::Kind::point_like ? "pld" : "fsd");
    r.scenario_id = buf;
  }
  r.sigma_mid_um = iris_radius(marginal_signal(psi_mid), 0.99);
  const double r_mo_um = sys.signal_arm.r2_mm * 1e3;
  r.transmission_nh = transmission(psi_mid, r_mo_um);
  r.transmission_h = transmission(psi_mid, r_mo_um, &detector);

  GaussianFit fit_nh = fit_gaussian(marginal_signal(psi_out));
  GaussianFit fit_h = fit_gaussian(detector_profile(psi_out, detector));
  r.width_nh = WidthReport::from_fit(fit_nh);
  r.width_h = WidthReport::from_fit(fit_h);
  r.fit_residual_nh = fit_nh.residual;
  r.fit_residual_h = fit_h.residual;

  SlopeFit sf = heralded_slope(psi_out, default_herald_positions(), detector);
  r.slope = sf.slope;
  r.slope_residual = sf.residual;
  return r;
}

// ---------------------------------------------------------------------------

/// Delta-impulse response of the signal arm: the central column of its full
/// kernel is the discretized point-spread function, fitted like any profile.
inline WidthReport diffraction_limit(const OpticalSystem& sys, const GridSpec& grids_in,
                                     KernelCache* cache = nullptr,
                                     GaussianFit* fit_out = nullptr) {
  validate_or_throw(sys);
  GridSpec grids = resolve_grids(sys, grids_in);
  KernelCache local;
  KernelCache& kc = cache ? *cache : local;
  const ArmKernels& ks = kc.get(sys.signal_arm, sys.source.lambda_s,
                                signal_axes(grids), "signal");
  int center = (ks.full.axis_in.n - 1) / 2;
  BeamProfile1D psf{ks.full.axis_out,
                    ks.full.dense.col(center).cwiseAbs2()};
  GaussianFit fit = fit_gaussian(normalized(psf));
  if (fit_out) *fit_out = fit;
  return WidthReport::from_fit(fit);
}

// ---------------------------------------------------------------------------

struct SweepRequest {
  double fs_min_mm = 30.0, fs_max_mm = 150.0;
  int points = 13;
  std::vector<double> rhos = {0.0, 0.9};
  std::vector<DetectorSpec> detectors = {DetectorSpec::point(0.0)};
};

/// Evaluates scenarios over the f_s grid for every (rho, detector). The
/// signal-arm first lens sits at its focal distance, so d1 follows f_s; the
/// lens-1 sample count is re-derived per f_s unless pinned in the grid spec.
/// Results are sorted by (rho, f_s, detector).
inline std::vector<ScenarioResult> sweep(const OpticalSystem& base,
                                         const GridSpec& grids,
                                         const SweepRequest& req,
                                         KernelCache* cache = nullptr) {
  if (req.rhos.empty()) throw ConfigError("sweep: empty rho list");
  if (req.detectors.empty()) throw ConfigError("sweep: empty detector list");
  if (req.points < 1) throw ConfigError("sweep: need at least one f_s point");
  if (!(req.fs_min_mm > 0) || req.fs_max_mm < req.fs_min_mm)
    throw ConfigError("sweep: invalid f_s range");
  KernelCache local;
  KernelCache& kc = cache ? *cache : local;
  std::vector<ScenarioResult> out;
  for (double rho : req.rhos) {
    for (int i = 0; i < req.points; ++i) {
      double fs = req.points == 1
                      ? req.fs_min_mm
                      : req.fs_min_mm + (req.fs_max_mm - req.fs_min_mm) * i /
                                            (req.points - 1);
      OpticalSystem sys = base;
      sys.source.rho = rho;
      sys.signal_arm.f1_mm = fs;
      sys.signal_arm.d1_mm = fs;
      GridSpec g = grids;
      g.signal_lens1.n = 0; // re-derive from the criterion for this f_s
      for (const DetectorSpec& det : req.detectors)
        out.push_back(run_scenario(sys, g, det, &kc));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Figure-style bundles.

struct ContourSegment {
  double level;  // absolute density value
  double xs1_um, xi1_um, xs2_um, xi2_um;
};

namespace detail {

/// Marching-squares iso-segments of the joint intensity at one level.
inline void contour_level(const ComplexField2D& f, double level,
                          std::vector<ContourSegment>& out) {
  Eigen::MatrixXd I = f.amp.cwiseAbs2();
  auto edge = [&](double xa, double ya, double va, double xb, double yb,
                  double vb, double* x, double* y) {
    double t = (level - va) / (vb - va);
    *x = xa + t * (xb - xa);
    *y = ya + t * (yb - ya);
  };
  for (int j = 0; j + 1 < f.axis_s.n; ++j)
    for (int k = 0; k + 1 < f.axis_i.n; ++k) {
      double v[4] = {I(j, k), I(j + 1, k), I(j + 1, k + 1), I(j, k + 1)};
      double xs[4] = {f.axis_s.at(j), f.axis_s.at(j + 1), f.axis_s.at(j + 1),
                      f.axis_s.at(j)};
      double xi[4] = {f.axis_i.at(k), f.axis_i.at(k), f.axis_i.at(k + 1),
                      f.axis_i.at(k + 1)};
      double px[4], py[4];
      int np = 0;
      for (int e = 0; e < 4; ++e) {
        int a = e, b = (e + 1) % 4;
        if ((v[a] < level) != (v[b] < level)) {
          edge(xs[a], xi[a], v[a], xs[b], xi[b], v[b], &px[np], &py[np]);
          ++np;
        }
      }
      for (int s = 0; s + 1 < np; s += 2)
        out.push_back({level, px[s], py[s], px[s + 1], py[s + 1]});
    }
}

}  // namespace detail

struct Fig2Bundle {
  ComplexField2D joint;  // psi_out
  double joint_mass = 0;
  std::vector<ContourSegment> contours;  // levels 10%..90% of peak
  BeamProfile1D marginal_signal, marginal_idler;
  BeamProfile1D conditional_0, conditional_m96;
};

inline Fig2Bundle reproduce_fig2(const OpticalSystem& sys, const GridSpec& grids_in,
                                 KernelCache* cache = nullptr) {
  validate_or_throw(sys);
  GridSpec grids = resolve_grids(sys, grids_in);
  KernelCache local;
  KernelCache& kc = cache ? *cache : local;
  Fig2Bundle b;
  b.joint = compute_fields(sys, grids, kc).out;
  b.joint_mass = norm_squared(b.joint);
  double peak = b.joint.amp.cwiseAbs2().maxCoeff();
  for (int l = 1; l <= 9; ++l)
    detail::contour_level(b.joint, 0.1 * l * peak, b.contours);
  b.marginal_signal = marginal_signal(b.joint);
  b.marginal_idler = marginal_idler(b.joint);
  b.conditional_0 = conditional_slice(b.joint, 0.0);
  b.conditional_m96 = conditional_slice(b.joint, -96.0);
  return b;
}

struct Fig4Result {
  double f_s_mm = 0;
  ComplexField2D mid;        // decimated psi_mid for export
  PhaseMap phase;            // phase of the decimated field
  double pearson_mid = 0;    // on the full psi_mid
  double pearson_out = 0;    // on the full psi_out
  double cross_structure = 0;
  double support_mass_outside_rs = 0;  // mass beyond |x_s'| = r1
};

namespace detail {

inline ComplexField2D decimate_rows(const ComplexField2D& f, int max_rows) {
  int stride = std::max(1, (f.axis_s.n - 1 + max_rows - 2) / (max_rows - 1));
  int m = (f.axis_s.n - 1) / stride + 1;
  ComplexField2D out;
  out.axis_s = Axis{f.axis_s.min_um,
                    f.axis_s.at((m - 1) * stride), m};
  out.axis_i = f.axis_i;
  out.amp.resize(m, f.axis_i.n);
  for (int j = 0; j < m; ++j) out.amp.row(j) = f.amp.row(j * stride);
  return out;
}

}  // namespace detail

inline std::vector<Fig4Result> reproduce_fig4(const OpticalSystem& base,
                                              const GridSpec& grids,
                                              const std::vector<double>& fs_list_mm = {30.0, 150.0},
                                              double rho = 0.9,
                                              KernelCache* cache = nullptr) {
  KernelCache local;
  KernelCache& kc = cache ? *cache : local;
  std::vector<Fig4Result> out;
  for (double fs : fs_list_mm) {
    OpticalSystem sys = base;
    sys.source.rho = rho;
    sys.signal_arm.f1_mm = fs;
    sys.signal_arm.d1_mm = fs;
    validate_or_throw(sys);
    GridSpec g = resolve_grids(sys, [&] {
      GridSpec t = grids;
      t.signal_lens1.n = 0;
      return t;
    }());
    ScenarioFields fields = compute_fields(sys, g, kc);
    ComplexField2D psi_mid = normalize(fields.mid);
    const ComplexField2D& psi_out = fields.out;

    Fig4Result r;
    r.f_s_mm = fs;
    r.pearson_mid = intensity_pearson(psi_mid);
    r.pearson_out = intensity_pearson(psi_out);
    r.cross_structure = phase_cross_structure(psi_mid);
    {
      BeamProfile1D ms = marginal_signal(psi_mid);
      double rs = sys.signal_arm.r1_mm * 1e3;
      r.support_mass_outside_rs = 1.0 - detail::mass_within(ms, rs);
    }
    r.mid = detail::decimate_rows(psi_mid, 322);
    r.phase = phase_map(r.mid);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results CSV, one row per scenario, 9 significant digits.

inline void write_results_csv(std::ostream& os,
                              const std::vector<ScenarioResult>& rows) {
  os << "scenario_id,f_s_mm,rho,detector_kind,detector_diam_um,sigma_mid_um,"
        "w_out_nh_nm,w_out_h_nm,fwhm_out_nh_nm,fwhm_out_h_nm,"
        "transmission_nh,transmission_h,slope,slope_residual\n";
  char buf[512];
  for (const ScenarioResult& r : rows) {
    std::snprintf(
        buf, sizeof buf,
        "%s,%.9g,%.9g,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
        r.scenario_id.c_str(), r.f_s_mm, r.rho,
        r.detector.kind == DetectorSpec::Kind::point_like ? "pld" : "fsd",
        r.detector.diameter_um, r.sigma_mid_um, r.width_nh.w_paper_um * 1e3,
        r.width_h.w_paper_um * 1e3, r.width_nh.fwhm_um * 1e3,
        r.width_h.fwhm_um * 1e3, r.transmission_nh, r.transmission_h, r.slope,
        r.slope_residual);
    os << buf;
  }
}

inline void write_contours_csv(std::ostream& os,
                               const std::vector<ContourSegment>& segs) {
  os << "level,xs1_um,xi1_um,xs2_um,xi2_um\n";
  char buf[256];
  for (const ContourSegment& s : segs) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g\n", s.level,
                  s.xs1_um, s.xi1_um, s.xs2_um, s.xi2_um);
    os << buf;
  }
}

}  // namespace biphoton
