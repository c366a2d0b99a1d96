#pragma once

// Optical system parameter vector and simulation grids.
//
// Canonical units: millimeters for distances, focal lengths and aperture
// radii; nanometers for wavelengths; inverse micrometers for the source mode
// profile radii. Grid extents are kept in micrometers. All unit conversion
// happens at the config-file boundary, where every key carries its unit as a
// suffix (_mm, _nm, _um, _per_um).

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "biphoton/errors.hpp"

namespace biphoton {

struct SourceParams {
  double delta_s = 0.25;   // signal mode profile radius, 1/um
  double delta_i = 0.25;   // idler mode profile radius, 1/um
  double rho = 0.0;        // Pearson correlation, open interval (-1, 1)
  double lambda_s = 532.0; // nm
  double lambda_i = 532.0; // nm
};

struct ArmLayout {
  // Source -> lens1 -> lens2 -> terminal plane.
  double d1_mm = 0, d2_mm = 0, d3_mm = 0; // propagation distances
  double f1_mm = 0, f2_mm = 0;            // focal lengths
  double r1_mm = 0, r2_mm = 0;            // aperture radii (half of diameter)
};

struct OpticalSystem {
  SourceParams source;
  ArmLayout signal_arm;
  ArmLayout idler_arm;
};

struct PlaneGrid {
  double half_um = 0; // half extent; axis spans [-half, +half]
  int n = 0;          // sample count; 0 requests auto-sizing
};

struct GridSpec {
  PlaneGrid source_s, source_i;
  PlaneGrid signal_lens1, signal_lens2, signal_out;
  PlaneGrid idler_lens1, idler_lens2, idler_out;
};

// ---------------------------------------------------------------------------

/// Reference system: f_MO = 2.5 mm, f_i1 = 30 mm, f_i2 = 1000 mm, lenses at
/// their focal distances, 100 mm between the lenses of each arm,
/// aperture diameters 25 / 8 / 25 / 50 mm, delta = 0.25 /um, lambda = 532 nm.
/// f_s is the free knob; rho defaults to 0 and is set by the caller.
inline OpticalSystem default_paper_system(double f_s_mm = 30.0, double rho = 0.0) {
  OpticalSystem s;
  s.source = SourceParams{0.25, 0.25, rho, 532.0, 532.0};
  s.signal_arm = ArmLayout{f_s_mm, 100.0, 2.5, f_s_mm, 2.5, 12.5, 4.0};
  s.idler_arm = ArmLayout{30.0, 100.0, 1000.0, 30.0, 1000.0, 12.5, 25.0};
  return s;
}

/// Returns the list of violated constraints, empty when the system is valid.
inline std::vector<std::string> validate(const OpticalSystem& s) {
  std::vector<std::string> bad;
  auto chk = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };
  chk(s.source.delta_s > 0, "source.delta_s must be > 0");
  chk(s.source.delta_i > 0, "source.delta_i must be > 0");
  chk(s.source.lambda_s > 0, "source.lambda_s must be > 0");
  chk(s.source.lambda_i > 0, "source.lambda_i must be > 0");
  chk(s.source.rho > -1.0 && s.source.rho < 1.0, "source.rho must lie in (-1, 1)");
  auto arm = [&](const ArmLayout& a, const std::string& p) {
    chk(a.d1_mm >= 0, p + ".d1 must be >= 0");
    chk(a.d2_mm >= 0, p + ".d2 must be >= 0");
    chk(a.d3_mm >= 0, p + ".d3 must be >= 0");
    chk(a.f1_mm != 0, p + ".f1 must be nonzero");
    chk(a.f2_mm != 0, p + ".f2 must be nonzero");
    chk(a.r1_mm > 0, p + ".r1 must be > 0");
    chk(a.r2_mm > 0, p + ".r2 must be > 0");
  };
  arm(s.signal_arm, "signal");
  arm(s.idler_arm, "idler");
  return bad;
}

inline void validate_or_throw(const OpticalSystem& s) {
  auto bad = validate(s);
  if (!bad.empty()) {
    std::string msg = "invalid optical system:";
    for (auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }
}

// ---------------------------------------------------------------------------
// Default grids.
//
// The lens-1 plane carries the quadrature that composes the whole arm, so its
// sample count is derived from the chirp sampling criterion: the phase of the
// composed integrand at that plane changes by at most pi between adjacent
// samples at the grid edges. A 1.15 headroom factor is applied and the count
// rounded up to odd so every axis has an exact center sample.

namespace detail {

inline int to_odd(int n) { return (n % 2 == 0) ? n + 1 : n; }

/// Largest admissible spacing at the quadrature plane between two free-space
/// sections with a lens in between. Extents in um, lambda in um.
inline double lens1_max_spacing(double d1_um, double d2_um, double f1_um,
                                double src_half_um, double l1_half_um,
                                double l2_half_um, double lambda_um) {
  double c2 = 0.0;
  if (d1_um > 0) c2 += 1.0 / d1_um;
  if (d2_um > 0) c2 += 1.0 / d2_um;
  c2 -= 1.0 / f1_um;
  double rate = std::abs(c2) * l1_half_um;
  if (d2_um > 0) rate += l2_half_um / d2_um;
  if (d1_um > 0) rate += src_half_um / d1_um;
  if (rate <= 0) return l1_half_um; // no chirp at all
  return lambda_um / (2.0 * rate);
}

inline int auto_lens1_samples(const ArmLayout& a, double lambda_nm,
                              double src_half_um, double l1_half_um,
                              double l2_half_um) {
  const double mm = 1e3;
  double dx = lens1_max_spacing(a.d1_mm * mm, a.d2_mm * mm, a.f1_mm * mm,
                                src_half_um, l1_half_um, l2_half_um,
                                lambda_nm * 1e-3);
  int n = static_cast<int>(std::ceil(2.0 * l1_half_um / dx * 1.15)) + 1;
  return to_odd(std::max(n, 17));
}

} // namespace detail

/// Grid defaults sized for the given system: source plane covers 5.5 sigma of
/// the position-space marginals, lens planes cover the arm apertures with 5%
/// margin, terminal planes are fixed windows around the focus / detector.
inline GridSpec default_grids(const OpticalSystem& s) {
  GridSpec g;
  const double sig_s = 1.0 / (2.0 * s.source.delta_s); // um
  const double sig_i = 1.0 / (2.0 * s.source.delta_i);
  g.source_s = {5.5 * sig_s, 257};
  g.source_i = {5.5 * sig_i, 257};

  auto lens_halves = [](const ArmLayout& a) {
    double h1 = 1.05 * a.r1_mm * 1e3;
    double h2 = 1.05 * std::max(a.r1_mm, a.r2_mm) * 1e3;
    return std::pair<double, double>{h1, h2};
  };
  auto [s1, s2] = lens_halves(s.signal_arm);
  g.signal_lens1 = {s1, detail::auto_lens1_samples(s.signal_arm, s.source.lambda_s,
                                                   g.source_s.half_um, s1, s2)};
  g.signal_lens2 = {s2, 1281};
  g.signal_out = {3.0, 1025};

  auto [i1, i2] = lens_halves(s.idler_arm);
  g.idler_lens1 = {i1, detail::auto_lens1_samples(s.idler_arm, s.source.lambda_i,
                                                  g.source_i.half_um, i1, i2)};
  g.idler_lens2 = {i2, 1281};
  g.idler_out = {300.0, 1025};
  return g;
}

/// Halved spacing everywhere (n -> 2n-1), for discretization-control runs.
inline GridSpec refined(const GridSpec& g) {
  GridSpec r = g;
  for (PlaneGrid* p : {&r.source_s, &r.source_i, &r.signal_lens1, &r.signal_lens2,
                       &r.signal_out, &r.idler_lens1, &r.idler_lens2, &r.idler_out})
    p->n = 2 * p->n - 1;
  return r;
}

// ---------------------------------------------------------------------------
// Config text format: one `key = value` per line, `#` comments, numeric
// values only. Aperture keys take diameters (the lab-sheet convention);
// radii are stored.

namespace detail {

struct KeyRef {
  double* target;
  double scale;    // multiply parsed value by this before storing
  bool required;
};

struct IntKeyRef {
  int* target;
};

struct ConfigBinding {
  std::map<std::string, KeyRef> dbl;
  std::map<std::string, IntKeyRef> integer;
};

inline ConfigBinding bind_config(OpticalSystem& s, GridSpec& g) {
  ConfigBinding b;
  auto req = [&](const std::string& k, double* t, double scale = 1.0) {
    b.dbl[k] = KeyRef{t, scale, true};
  };
  auto opt = [&](const std::string& k, double* t, double scale = 1.0) {
    b.dbl[k] = KeyRef{t, scale, false};
  };
  auto opti = [&](const std::string& k, int* t) { b.integer[k] = IntKeyRef{t}; };

  req("source.delta_s_per_um", &s.source.delta_s);
  req("source.delta_i_per_um", &s.source.delta_i);
  req("source.rho", &s.source.rho);
  req("source.lambda_s_nm", &s.source.lambda_s);
  req("source.lambda_i_nm", &s.source.lambda_i);
  auto arm = [&](ArmLayout& a, const std::string& p) {
    req(p + ".d1_mm", &a.d1_mm);
    req(p + ".d2_mm", &a.d2_mm);
    req(p + ".d3_mm", &a.d3_mm);
    req(p + ".f1_mm", &a.f1_mm);
    req(p + ".f2_mm", &a.f2_mm);
    req(p + ".ap1_diam_mm", &a.r1_mm, 0.5);
    req(p + ".ap2_diam_mm", &a.r2_mm, 0.5);
  };
  arm(s.signal_arm, "signal");
  arm(s.idler_arm, "idler");

  auto plane = [&](PlaneGrid& p, const std::string& k, double scale) {
    opt(k + (scale == 1.0 ? "_half_um" : "_half_mm"), &p.half_um, scale);
    opti(k + "_n", &p.n);
  };
  plane(g.source_s, "grid.source_s", 1.0);
  plane(g.source_i, "grid.source_i", 1.0);
  plane(g.signal_lens1, "grid.signal_lens1", 1e3);
  plane(g.signal_lens2, "grid.signal_lens2", 1e3);
  plane(g.signal_out, "grid.signal_out", 1.0);
  plane(g.idler_lens1, "grid.idler_lens1", 1e3);
  plane(g.idler_lens2, "grid.idler_lens2", 1e3);
  plane(g.idler_out, "grid.idler_out", 1.0);
  return b;
}

} // namespace detail

/// Parses config text. Grid keys are optional; omitted planes take the
/// defaults for the parsed system (auto-sized lens-1 counts).
inline std::pair<OpticalSystem, GridSpec> load_config(const std::string& text) {
  OpticalSystem sys;
  GridSpec grids{}; // filled from defaults below; overrides land on top
  detail::ConfigBinding bind = detail::bind_config(sys, grids);

  std::set<std::string> seen;
  std::map<std::string, std::pair<std::string, int>> grid_overrides; // key -> (value, line)
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw ConfigError("config line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto ws = line.find_first_not_of(" \t\r");
    if (ws == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected `key = value`");
    auto trim = [](std::string t) {
      auto a = t.find_first_not_of(" \t\r");
      auto b = t.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : t.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) fail("expected `key = value`");
    if (seen.count(key)) fail("duplicate key `" + key + "`");
    seen.insert(key);

    auto parse_num = [&](const std::string& v) {
      try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) fail("trailing characters after number in `" + v + "`");
        return x;
      } catch (const std::logic_error&) {
        fail("not a number: `" + v + "`");
        return 0.0; // unreachable
      }
    };

    if (auto it = bind.dbl.find(key); it != bind.dbl.end()) {
      *it->second.target = parse_num(val) * it->second.scale;
      if (key.rfind("grid.", 0) == 0) grid_overrides[key] = {val, lineno};
    } else if (auto ii = bind.integer.find(key); ii != bind.integer.end()) {
      double x = parse_num(val);
      if (x != std::floor(x) || x < 0) fail("`" + key + "` must be a nonnegative integer");
      *ii->second.target = static_cast<int>(x);
      grid_overrides[key] = {val, lineno};
    } else {
      fail("unknown key `" + key + "`");
    }
  }

  std::vector<std::string> missing;
  for (auto& [k, ref] : bind.dbl)
    if (ref.required && !seen.count(k)) missing.push_back(k);
  if (!missing.empty()) {
    std::string msg = "config missing required key(s):";
    for (auto& m : missing) msg += " " + m;
    throw ConfigError(msg);
  }
  validate_or_throw(sys);

  // Start from defaults, then replay any explicit grid keys.
  GridSpec resolved = default_grids(sys);
  {
    OpticalSystem dummy = sys;
    detail::ConfigBinding rb = detail::bind_config(dummy, resolved);
    for (auto& [k, vl] : grid_overrides) {
      lineno = vl.second;
      if (auto it = rb.dbl.find(k); it != rb.dbl.end())
        *it->second.target = std::stod(vl.first) * it->second.scale;
      else
        *rb.integer.at(k).target = static_cast<int>(std::stod(vl.first));
    }
  }
  for (auto& [name, p] :
       std::initializer_list<std::pair<const char*, PlaneGrid*>>{
           {"source_s", &resolved.source_s}, {"source_i", &resolved.source_i},
           {"signal_lens1", &resolved.signal_lens1}, {"signal_lens2", &resolved.signal_lens2},
           {"signal_out", &resolved.signal_out}, {"idler_lens1", &resolved.idler_lens1},
           {"idler_lens2", &resolved.idler_lens2}, {"idler_out", &resolved.idler_out}}) {
    if (p->half_um <= 0)
      throw ConfigError(std::string("grid.") + name + ": half extent must be > 0");
    if (p->n != 0 && p->n < 16)
      throw ConfigError(std::string("grid.") + name + ": sample count must be >= 16");
  }
  return {sys, resolved};
}

inline std::string serialize(const OpticalSystem& s,
                             const std::optional<GridSpec>& grids = std::nullopt) {
  std::ostringstream out;
  char buf[64];
  auto emit = [&](const std::string& k, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << k << " = " << buf << "\n";
  };
  emit("source.delta_s_per_um", s.source.delta_s);
  emit("source.delta_i_per_um", s.source.delta_i);
  emit("source.rho", s.source.rho);
  emit("source.lambda_s_nm", s.source.lambda_s);
  emit("source.lambda_i_nm", s.source.lambda_i);
  auto arm = [&](const ArmLayout& a, const std::string& p) {
    emit(p + ".d1_mm", a.d1_mm);
    emit(p + ".d2_mm", a.d2_mm);
    emit(p + ".d3_mm", a.d3_mm);
    emit(p + ".f1_mm", a.f1_mm);
    emit(p + ".f2_mm", a.f2_mm);
    emit(p + ".ap1_diam_mm", 2.0 * a.r1_mm);
    emit(p + ".ap2_diam_mm", 2.0 * a.r2_mm);
  };
  arm(s.signal_arm, "signal");
  arm(s.idler_arm, "idler");
  if (grids) {
    auto plane = [&](const PlaneGrid& p, const std::string& k, double scale) {
      emit(k + (scale == 1.0 ? "_half_um" : "_half_mm"), p.half_um / scale);
      out << k << "_n = " << p.n << "\n";
    };
    plane(grids->source_s, "grid.source_s", 1.0);
    plane(grids->source_i, "grid.source_i", 1.0);
    plane(grids->signal_lens1, "grid.signal_lens1", 1e3);
    plane(grids->signal_lens2, "grid.signal_lens2", 1e3);
    plane(grids->signal_out, "grid.signal_out", 1.0);
    plane(grids->idler_lens1, "grid.idler_lens1", 1e3);
    plane(grids->idler_lens2, "grid.idler_lens2", 1e3);
    plane(grids->idler_out, "grid.idler_out", 1.0);
  }
  return out.str();
}

inline bool operator==(const SourceParams& a, const SourceParams& b) {
  return a.delta_s == b.delta_s && a.delta_i == b.delta_i && a.rho == b.rho &&
         a.lambda_s == b.lambda_s && a.lambda_i == b.lambda_i;
}
inline bool operator==(const ArmLayout& a, const ArmLayout& b) {
  return a.d1_mm == b.d1_mm && a.d2_mm == b.d2_mm && a.d3_mm == b.d3_mm &&
         a.f1_mm == b.f1_mm && a.f2_mm == b.f2_mm && a.r1_mm == b.r1_mm &&
         a.r2_mm == b.r2_mm;
}
inline bool operator==(const OpticalSystem& a, const OpticalSystem& b) {
  return a.source == b.source && a.signal_arm == b.signal_arm &&
         a.idler_arm == b.idler_arm;
}

}  // namespace biphoton
