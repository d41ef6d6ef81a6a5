#include "pmsmopt/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pmsmopt/errors.hpp"
#include "pmsmopt/io.hpp"

namespace pmsmopt {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

DesignSpec DesignSpec::defaults() {
  using K = ParamKind;
  DesignSpec spec;
  spec.params = {{
      {"p_pairs", 3, 4, K::integer},
      {"r_rotor", 50, 80, K::continuous},
      {"g_air", 0.6, 1.2, K::continuous},
      {"slot_depth", 15, 30, K::continuous},
      {"yoke_h", 8, 20, K::continuous},
      {"tooth_w", 4, 10, K::continuous},
      {"m1_w", 10, 40, K::continuous},
      {"m1_t", 3, 8, K::continuous},
      {"a1_deg", 20, 70, K::continuous},
      {"m2_w", 8, 30, K::continuous},
      {"m2_t", 3, 8, K::continuous},
      {"a2_deg", 20, 70, K::continuous},
      {"l_stk", 60, 120, K::continuous},
      {"n_t", 4, 12, K::integer},
  }};
  return spec;
}

void DesignSpec::validate() const {
  for (const auto& p : params) {
    if (!(p.lower < p.upper)) {
      throw ConfigError("parameter " + p.name + ": lower bound must be strictly below upper bound");
    }
    if (p.kind == ParamKind::integer && (p.lower != std::round(p.lower) || p.upper != std::round(p.upper))) {
      throw ConfigError("integer parameter " + p.name + " has non-integer bounds");
    }
  }
  const auto& pp = (*this)[Param::pole_pairs];
  if (pp.lower < 1) throw ConfigError("p_pairs lower bound must be >= 1");
  if ((*this)[Param::turns].lower < 1) throw ConfigError("n_t lower bound must be >= 1");
}

std::vector<Variable> DesignSpec::variables() const {
  std::vector<Variable> vars;
  vars.reserve(kNumParams);
  for (const auto& p : params) vars.push_back({p.lower, p.upper, p.kind == ParamKind::integer});
  return vars;
}

std::size_t DesignSpec::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (params[i].name == name) return i;
  }
  return kNumParams;
}

DesignVector DesignVector::from_span(std::span<const double> x) {
  if (x.size() != kNumParams) throw InvariantError("design vector must have 14 entries");
  DesignVector v;
  std::copy(x.begin(), x.end(), v.values.begin());
  return v;
}

DesignVector clamp_to_bounds(std::span<const double> raw, const DesignSpec& spec) {
  if (raw.size() != kNumParams) throw InvariantError("clamp_to_bounds: expected 14 values");
  DesignVector v;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto& b = spec.params[i];
    v.values[i] = clamp_variable(raw[i], {b.lower, b.upper, b.kind == ParamKind::integer});
  }
  return v;
}

bool within_bounds(const DesignVector& v, const DesignSpec& spec) {
  const auto vars = spec.variables();
  return within_bounds(v.span(), vars);
}

DerivedGeometry derive_geometry(const DesignVector& v) {
  namespace gc = geometry_constants;
  const double p = v.pole_pairs();
  const double r = v[Param::rotor_radius];
  const double l_stk = v[Param::stack_length];
  const double a1 = v[Param::magnet1_angle] * kDegToRad;
  const double a2 = v[Param::magnet2_angle] * kDegToRad;

  DerivedGeometry g;
  g.n_slots = gc::kSlotsPerPolePair * v.pole_pairs();
  g.pole_pitch = std::numbers::pi * r / p;
  g.anchor1 = gc::kAnchor1 * r;
  g.anchor2 = gc::kAnchor2 * r;
  g.outer_radius = r + v[Param::air_gap] + v[Param::slot_depth] + v[Param::yoke_height];
  g.slot_pitch_mid =
      2.0 * std::numbers::pi * (r + v[Param::air_gap] + v[Param::slot_depth] / 2.0) / g.n_slots;
  g.slot_area = v[Param::slot_depth] * (g.slot_pitch_mid - v[Param::tooth_width]);

  const double arc = v[Param::magnet1_width] * std::cos(a1) + v[Param::magnet2_width] * std::cos(a2);
  g.pole_arc_ratio = std::clamp(arc / g.pole_pitch, 0.0, 1.0);

  g.magnet_volume = 2.0 * p *
                    (v[Param::magnet1_width] * v[Param::magnet1_thickness] +
                     v[Param::magnet2_width] * v[Param::magnet2_thickness]) *
                    l_stk;

  const double l_end = gc::kEndWindingFactor * g.pole_pitch;
  g.copper_volume = g.n_slots * g.slot_area * gc::kFillFactor * (l_stk + l_end);

  const double r_inner = r - gc::kShaftMargin;
  g.iron_volume = std::numbers::pi * (g.outer_radius * g.outer_radius - r_inner * r_inner) * l_stk -
                  g.n_slots * g.slot_area * l_stk - g.magnet_volume;
  return g;
}

GeometryReport geometry_check(const DesignVector& v, const GeometryLimits& limits) {
  const auto g = derive_geometry(v);
  const double r = v[Param::rotor_radius];
  const double a1 = v[Param::magnet1_angle] * kDegToRad;
  const double a2 = v[Param::magnet2_angle] * kDegToRad;
  const double w1 = v[Param::magnet1_width];
  const double w2 = v[Param::magnet2_width];
  const double t1 = v[Param::magnet1_thickness];
  const double t2 = v[Param::magnet2_thickness];
  const double half_pole_sin = std::sin(std::numbers::pi / (2.0 * v.pole_pairs()));

  // Outermost radial extent of layer 1, shared by G1 and G3.
  const double layer1_top = g.anchor1 + (w1 / 2.0) * std::sin(a1) + t1;

  GeometryReport rep;
  rep.values[0] = std::max(layer1_top + limits.bridge_min - r,
                           g.anchor2 + (w2 / 2.0) * std::sin(a2) + t2 + limits.bridge_min - r);
  rep.values[1] = std::max(w1 * std::cos(a1) + limits.web_width - 2.0 * g.anchor1 * half_pole_sin,
                           w2 * std::cos(a2) + limits.web_width - 2.0 * g.anchor2 * half_pole_sin);
  rep.values[2] = layer1_top + limits.iron_min - g.anchor2;
  rep.values[3] = limits.slot_opening_min - (g.slot_pitch_mid - v[Param::tooth_width]);
  rep.values[4] = g.outer_radius - limits.outer_radius_max;

  for (std::size_t k = 0; k < kNumGeometryChecks; ++k) {
    rep.violations[k] = std::max(0.0, rep.values[k]);
    rep.total_violation += rep.violations[k];
  }
  rep.feasible = rep.total_violation == 0.0;
  return rep;
}

std::string design_spec_hash(const DesignSpec& spec) {
  namespace gc = geometry_constants;
  std::string def = "spec-v1";
  for (const auto& p : spec.params) {
    def += ";" + p.name + "=" + format_double(p.lower) + ":" + format_double(p.upper) +
           (p.kind == ParamKind::integer ? "i" : "c");
  }
  const auto& l = spec.limits;
  for (double x : {l.bridge_min, l.web_width, l.iron_min, l.slot_opening_min, l.outer_radius_max, gc::kAnchor1,
                   gc::kAnchor2, gc::kFillFactor, gc::kEndWindingFactor, gc::kShaftMargin}) {
    def += ";" + format_double(x);
  }
  def += ";" + std::to_string(gc::kSlotsPerPolePair);
  return hex64(fnv1a64(def));
}

}  // namespace pmsmopt
