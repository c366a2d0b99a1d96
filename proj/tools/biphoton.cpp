// Command-line front end: simulate / sweep / limit / verify / fig2 / fig4.
// Exit codes: 0 success, 1 usage or config error, 2 numerical error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "biphoton/experiment.hpp"
#include "biphoton/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace biphoton;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  double fs_mm = -1;       // <0: leave as configured
  double rho = -10;        // <-1: leave as configured
  std::string pld;         // heralding center, um
  std::string fsd;         // CENTER_UM:DIAM_UM
  int points = 13;
  bool plot = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "config file (key = value lines)");
  cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--fs-mm", o.fs_mm, "signal first-lens focal length, mm");
  cmd->add_option("--rho", o.rho, "source correlation coefficient");
  cmd->add_option("--pld", o.pld, "point-like heralding detector position, um");
  cmd->add_option("--fsd", o.fsd, "finite-size detector CENTER_UM:DIAM_UM");
  cmd->add_option("--points", o.points, "f_s sample count for sweeps")
      ->capture_default_str();
  cmd->add_flag("--plot", o.plot, "also render SVG charts");
}

struct Setup {
  OpticalSystem sys;
  GridSpec grids{};
  DetectorSpec detector = DetectorSpec::point(0.0);
};

Setup make_setup(const CommonOpts& o) {
  Setup s;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot open config file: " + o.config_path);
    std::ostringstream text;
    text << in.rdbuf();
    std::tie(s.sys, s.grids) = load_config(text.str());
  } else {
    s.sys = default_paper_system();
    // grids stay zero; resolve_grids fills criterion-based defaults
  }
  if (o.fs_mm > 0) {
    s.sys.signal_arm.f1_mm = o.fs_mm;
    s.sys.signal_arm.d1_mm = o.fs_mm; // lens kept at its focal distance
    s.grids.signal_lens1.n = 0;       // re-derive the quadrature count
  }
  if (o.rho >= -1) s.sys.source.rho = o.rho;
  if (!o.fsd.empty()) {
    double c, d;
    char colon = 0;
    std::istringstream in(o.fsd);
    if (!(in >> c >> colon >> d) || colon != ':' || !in.eof())
      throw ConfigError("--fsd expects CENTER_UM:DIAM_UM");
    s.detector = DetectorSpec::finite(c, d);
  } else if (!o.pld.empty()) {
    s.detector = DetectorSpec::point(std::stod(o.pld));
  }
  validate_or_throw(s.sys);
  return s;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name, std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + (dir / name).string());
  return f;
}

void write_profile(const fs::path& dir, const std::string& name,
                   const BeamProfile1D& p, const std::string& meta = "") {
  auto f = open_out(dir, name);
  write_profile_csv(f, p, meta);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonOpts& o) {
  Setup s = make_setup(o);
  KernelCache cache;
  ScenarioResult r = run_scenario(s.sys, s.grids, s.detector, &cache);
  {
    auto f = open_out(o.out_dir, "results.csv");
    write_results_csv(f, {r});
  }
  ScenarioFields fields =
      compute_fields(s.sys, resolve_grids(s.sys, s.grids), cache);
  write_profile(o.out_dir, "profile_nonheralded.csv", marginal_signal(fields.out));
  write_profile(o.out_dir, "profile_heralded.csv",
                detector_profile(fields.out, s.detector));
  write_profile(o.out_dir, "profile_mid_signal.csv",
                marginal_signal(normalize(fields.mid)));
  std::cout << "wrote " << (fs::path(o.out_dir) / "results.csv").string()
            << " (w_nh = " << r.width_nh.w_paper_um * 1e3
            << " nm, w_h = " << r.width_h.w_paper_um * 1e3 << " nm)\n";
  return 0;
}

int cmd_sweep(const CommonOpts& o) {
  Setup s = make_setup(o);
  SweepRequest req;
  req.points = o.points;
  if (o.rho >= -1) req.rhos = {o.rho};
  req.detectors = {s.detector};
  KernelCache cache;
  std::vector<ScenarioResult> rows = sweep(s.sys, s.grids, req, &cache);
  {
    auto f = open_out(o.out_dir, "results.csv");
    write_results_csv(f, rows);
  }
  if (o.plot) {
    for (double rho : req.rhos) {
      char tag[32];
      std::snprintf(tag, sizeof tag, "rho%g", rho);
      SvgChart width("output width vs iris radius (" + std::string(tag) + ")",
                     "sigma_mid [um]", "w_out [nm]");
      SvgChart trans("MO transmission (" + std::string(tag) + ")",
                     "sigma_mid [um]", "T");
      SvgSeries nh{"non-heralded", "#1f77b4", {}}, h{"heralded", "#d62728", {}};
      SvgSeries tnh{"non-heralded", "#1f77b4", {}}, th{"heralded", "#d62728", {}};
      for (const ScenarioResult& r : rows) {
        if (r.rho != rho) continue;
        nh.points.emplace_back(r.sigma_mid_um, r.width_nh.w_paper_um * 1e3);
        h.points.emplace_back(r.sigma_mid_um, r.width_h.w_paper_um * 1e3);
        tnh.points.emplace_back(r.sigma_mid_um, r.transmission_nh);
        th.points.emplace_back(r.sigma_mid_um, r.transmission_h);
      }
      width.add(nh); width.add(h);
      trans.add(tnh); trans.add(th);
      auto fw = open_out(o.out_dir, std::string("sweep_width_") + tag + ".svg");
      width.write(fw);
      auto ft = open_out(o.out_dir, std::string("sweep_transmission_") + tag + ".svg");
      trans.write(ft);
    }
  }
  std::cout << "wrote " << rows.size() << " scenario rows to "
            << (fs::path(o.out_dir) / "results.csv").string() << "\n";
  return 0;
}

int cmd_limit(const CommonOpts& o) {
  Setup s = make_setup(o);
  GaussianFit fit;
  WidthReport w = diffraction_limit(s.sys, s.grids, nullptr, &fit);
  auto f = open_out(o.out_dir, "limit.csv");
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "w_paper_nm,fwhm_nm,sigma_fit_nm,fit_residual\n%.9g,%.9g,%.9g,%.9g\n",
                w.w_paper_um * 1e3, w.fwhm_um * 1e3, w.sigma_fit_um * 1e3,
                fit.residual);
  f << buf;
  std::cout << "diffraction limit: w_paper = " << w.w_paper_um * 1e3
            << " nm (fwhm " << w.fwhm_um * 1e3 << " nm)\n";
  return 0;
}

int cmd_verify(const CommonOpts& o) {
  Setup s = make_setup(o);
  int failures = 0;
  bool numeric_failure = false;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  GridSpec grids = resolve_grids(s.sys, s.grids);
  KernelCache cache;
  try {
    cache.get(s.sys.signal_arm, s.sys.source.lambda_s, signal_axes(grids), "signal");
    cache.get(s.sys.idler_arm, s.sys.source.lambda_i, idler_axes(grids), "idler");
    report("sampling criteria (both arms)", true, "");
  } catch (const NumericError& e) {
    report("sampling criteria (both arms)", false, e.what());
    numeric_failure = true;
    std::cout << failures << " check(s) failed\n";
    return 2;
  }

  ScenarioFields fields = compute_fields(s.sys, grids, cache);
  double n2 = norm_squared(fields.out);
  report("output field normalization", std::abs(n2 - 1.0) < 1e-9,
         "norm^2 = " + std::to_string(n2));
  double mass = profile_mass(marginal_signal(fields.out));
  report("marginal unit mass", std::abs(mass - 1.0) < 1e-6, "");

  // Aperture-free control: 10x apertures against the ray-transfer oracle.
  OpticalSystem open_sys = s.sys;
  open_sys.signal_arm.r1_mm *= 10; open_sys.signal_arm.r2_mm *= 10;
  open_sys.idler_arm.r1_mm *= 10; open_sys.idler_arm.r2_mm *= 10;
  ScenarioFields open_fields = compute_fields(open_sys, grids, cache);
  IntensityMoments m = intensity_moments(open_fields.out);
  GaussianOracle g = gaussian_oracle(open_sys);
  double dev = std::max({std::abs(m.var_s / g.cov_out(0, 0) - 1.0),
                         std::abs(m.var_i / g.cov_out(1, 1) - 1.0)});
  if (std::abs(g.cov_out(0, 1)) > 0)
    dev = std::max(dev, std::abs(m.cov_si / g.cov_out(0, 1) - 1.0));
  {
    char b[64];
    std::snprintf(b, sizeof b, "max covariance deviation %.3g", dev);
    bool ok = dev < 0.01;
    report("open-aperture covariance vs ray-transfer oracle", ok, b);
    numeric_failure |= !ok;
  }
  {
    SlopeFit sf = heralded_slope(open_fields.out, default_herald_positions(),
                                 s.detector);
    bool ok;
    char b[96];
    if (std::abs(g.slope) > 1e-12) {
      ok = std::abs(sf.slope / g.slope - 1.0) < 0.005;
      std::snprintf(b, sizeof b, "numeric %.6g vs analytic %.6g", sf.slope, g.slope);
    } else {
      ok = std::abs(sf.slope) < 1e-5;
      std::snprintf(b, sizeof b, "numeric %.3g vs analytic 0", sf.slope);
    }
    report("heralded centroid slope vs analytic", ok, b);
    numeric_failure |= !ok;
  }

  std::cout << (failures ? std::to_string(failures) + " check(s) failed\n"
                         : "all checks passed\n");
  if (!failures) return 0;
  return numeric_failure ? 2 : 1;
}

int cmd_fig2(const CommonOpts& o) {
  Setup s = make_setup(o);
  Fig2Bundle b = reproduce_fig2(s.sys, s.grids);
  {
    auto f = open_out(o.out_dir, "joint_contours.csv");
    write_contours_csv(f, b.contours);
  }
  write_profile(o.out_dir, "marginal_signal.csv", b.marginal_signal);
  write_profile(o.out_dir, "marginal_idler.csv", b.marginal_idler);
  write_profile(o.out_dir, "conditional_x0.csv", b.conditional_0);
  write_profile(o.out_dir, "conditional_xm96.csv", b.conditional_m96);
  std::cout << "wrote joint contours and profiles (joint mass "
            << b.joint_mass << ")\n";
  return 0;
}

int cmd_fig4(const CommonOpts& o) {
  Setup s = make_setup(o);
  std::vector<double> fs_list = o.fs_mm > 0 ? std::vector<double>{o.fs_mm}
                                            : std::vector<double>{30.0, 150.0};
  double rho = o.rho >= -1 ? o.rho : 0.9;
  std::vector<Fig4Result> results = reproduce_fig4(s.sys, s.grids, fs_list, rho);
  auto summary = open_out(o.out_dir, "fig4_summary.csv");
  summary << "f_s_mm,pearson_mid,pearson_out,phase_cross_structure,"
             "mass_outside_rs\n";
  for (const Fig4Result& r : results) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "fs%g", r.f_s_mm);
    {
      auto f = open_out(o.out_dir, std::string("mid_intensity_") + tag + ".csv");
      write_intensity_csv(f, r.mid);
    }
    {
      auto f = open_out(o.out_dir, std::string("mid_phase_") + tag + ".csv");
      f << "x_s_um,x_i_um,arg,valid\n";
      char buf[128];
      for (int j = 0; j < r.mid.axis_s.n; ++j)
        for (int k = 0; k < r.mid.axis_i.n; ++k) {
          std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%d\n",
                        r.mid.axis_s.at(j), r.mid.axis_i.at(k),
                        r.phase.arg(j, k), r.phase.valid(j, k) ? 1 : 0);
          f << buf;
        }
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g\n", r.f_s_mm,
                  r.pearson_mid, r.pearson_out, r.cross_structure,
                  r.support_mass_outside_rs);
    summary << buf;
  }
  std::cout << "wrote fig4 grids for " << results.size() << " f_s value(s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-photon optical resolution simulator"};
  app.require_subcommand(1);
  CommonOpts o;
  auto* c_sim = app.add_subcommand("simulate", "run one scenario");
  auto* c_sweep = app.add_subcommand("sweep", "run the f_s sweep");
  auto* c_limit = app.add_subcommand("limit", "delta-impulse diffraction limit");
  auto* c_verify = app.add_subcommand("verify", "run the invariant checks");
  auto* c_fig2 = app.add_subcommand("fig2", "joint/marginal/conditional bundle");
  auto* c_fig4 = app.add_subcommand("fig4", "mid-plane intensity and phase maps");
  for (auto* c : {c_sim, c_sweep, c_limit, c_verify, c_fig2, c_fig4})
    add_common(c, o);

  try {
    app.parse(argc, argv);
    if (c_sim->parsed()) return cmd_simulate(o);
    if (c_sweep->parsed()) return cmd_sweep(o);
    if (c_limit->parsed()) return cmd_limit(o);
    if (c_verify->parsed()) return cmd_verify(o);
    if (c_fig2->parsed()) return cmd_fig2(o);
    return cmd_fig4(o);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
