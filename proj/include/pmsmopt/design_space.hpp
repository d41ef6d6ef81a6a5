#pragma once

// Double-V interior PMSM parameterization: 14 design parameters, box bounds,
// derived geometric quantities and the five-inequality geometry check.
// All lengths are in mm, areas in mm^2, volumes in mm^3 and angles in degrees
// unless a name says otherwise.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmsmopt/variables.hpp"

namespace pmsmopt {

inline constexpr std::size_t kNumParams = 14;

enum class Param : std::size_t {
  pole_pairs = 0,
  rotor_radius,
  air_gap,
  slot_depth,
  yoke_height,
  tooth_width,
  magnet1_width,
  magnet1_thickness,
  magnet1_angle,
  magnet2_width,
  magnet2_thickness,
  magnet2_angle,
  stack_length,
  turns,
};

enum class ParamKind { continuous, integer };

struct ParamBounds {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  ParamKind kind = ParamKind::continuous;
};

/// Limits used by geometry_check. Overridable per campaign.
struct GeometryLimits {
  double bridge_min = 1.5;        // t_bridge_min
  double web_width = 3.0;         // w_web
  double iron_min = 2.0;          // t_iron_min between layers
  double slot_opening_min = 2.0;  // w_slot_min
  double outer_radius_max = 120.0;
};

// Fixed construction constants, identical for every evaluation path.
namespace geometry_constants {
inline constexpr double kAnchor1 = 0.60;
inline constexpr double kAnchor2 = 0.78;
inline constexpr double kFillFactor = 0.45;
inline constexpr double kEndWindingFactor = 2.2;
inline constexpr double kShaftMargin = 25.0;
inline constexpr int kSlotsPerPolePair = 6;
}  // namespace geometry_constants

struct DesignSpec {
  std::array<ParamBounds, kNumParams> params;
  GeometryLimits limits;

  static DesignSpec defaults();

  /// Throws ConfigError when a lower bound is not strictly below its upper
  /// bound or an integer parameter has fractional bounds.
  void validate() const;

  std::vector<Variable> variables() const;
  const ParamBounds& operator[](Param p) const { return params[static_cast<std::size_t>(p)]; }
  ParamBounds& operator[](Param p) { return params[static_cast<std::size_t>(p)]; }

  /// Index of the parameter called `name`, or kNumParams if unknown.
  std::size_t index_of(std::string_view name) const;
};

/// One candidate machine. Integer parameters are stored as exact integers.
struct DesignVector {
  std::array<double, kNumParams> values{};

  double operator[](Param p) const { return values[static_cast<std::size_t>(p)]; }
  double& operator[](Param p) { return values[static_cast<std::size_t>(p)]; }

  int pole_pairs() const { return static_cast<int>((*this)[Param::pole_pairs]); }
  int turns() const { return static_cast<int>((*this)[Param::turns]); }

  std::span<const double> span() const { return values; }
  static DesignVector from_span(std::span<const double> x);

  friend bool operator==(const DesignVector&, const DesignVector&) = default;
};

struct DerivedGeometry {
  int n_slots = 0;
  double pole_pitch = 0.0;      // tau_p
  double anchor1 = 0.0;         // d1
  double anchor2 = 0.0;         // d2
  double outer_radius = 0.0;    // r_out
  double slot_pitch_mid = 0.0;  // s_p at mid-slot radius
  double slot_area = 0.0;
  double magnet_volume = 0.0;
  double copper_volume = 0.0;
  double iron_volume = 0.0;
  double pole_arc_ratio = 0.0;  // beta, clamped to [0, 1]
};

inline constexpr std::size_t kNumGeometryChecks = 5;

struct GeometryReport {
  bool feasible = true;
  /// Raw inequality values G1..G5; > 0 means violated.
  std::array<double, kNumGeometryChecks> values{};
  /// max(0, value) per check.
  std::array<double, kNumGeometryChecks> violations{};
  double total_violation = 0.0;

  static constexpr std::array<std::string_view, kNumGeometryChecks> kCheckIds{
      "G1_radial_fit", "G2_tangential_fit", "G3_inter_layer_iron", "G4_slot_opening", "G5_packaging"};
};

DesignVector clamp_to_bounds(std::span<const double> raw, const DesignSpec& spec);

DerivedGeometry derive_geometry(const DesignVector& v);

GeometryReport geometry_check(const DesignVector& v, const GeometryLimits& limits = {});

bool within_bounds(const DesignVector& v, const DesignSpec& spec);

/// Hex digest of the bounds, kinds, geometry limits and construction
/// constants. Datasets and models carry it; consumers refuse a mismatch.
std::string design_spec_hash(const DesignSpec& spec);

}  // namespace pmsmopt
