#pragma once

// Physics post-processing shared by the classical and the hybrid evaluation
// paths: intermediate measures + design -> operating points, torque-speed
// curve, KPIs and constraint values. Pure functions of their arguments.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "pmsmopt/design_space.hpp"
#include "pmsmopt/machine_model.hpp"

namespace pmsmopt {

namespace drive_constants {
inline constexpr double kDcLinkVoltage = 400.0;  // U_dc [V]
inline constexpr double kCopperResistivity = 2.0e-8;  // [Ohm m]
inline constexpr double kRequiredTorque = 180.0;  // T_req [N m]
inline constexpr double kBaseSpeedRpm = 4000.0;
inline constexpr double kGridMinRpm = 500.0;
inline constexpr double kGridMaxRpm = 16000.0;
inline constexpr std::size_t kSpeedGridPoints = 33;
inline constexpr int kCurrentAngleSteps = 91;  // 90..180 deg in 1 deg steps
inline constexpr int kBisectionIterations = 40;
inline constexpr int kCurrentScanSteps = 16;
inline constexpr int kAngleRefineIterations = 24;  // golden-section steps around the best grid angle
}  // namespace drive_constants

namespace cost_constants {
inline constexpr double kMagnetDensity = 7500.0;
inline constexpr double kCopperDensity = 8960.0;
inline constexpr double kIronDensity = 7650.0;
inline constexpr double kMagnetPrice = 60.0;
inline constexpr double kCopperPrice = 10.0;
inline constexpr double kIronPrice = 2.0;
}  // namespace cost_constants

double rpm_to_rad_per_s(double rpm);

struct OperatingPoint {
  double omega_m = 0.0;  // [rad/s]
  double i_d = 0.0;
  double i_q = 0.0;
  double psi_d = 0.0;
  double psi_q = 0.0;
  double torque = 0.0;
  double u_mag = 0.0;
  double p_fe = 0.0;
  double p_cu = 0.0;
  double p_shaft = 0.0;
  /// False when no current satisfies the voltage limit at this speed; the
  /// point is then the zero-current point and torque is 0.
  bool feasible = true;
};

struct KpiVector {
  double neg_max_power = 0.0;  // k1 = -P_max [W]
  double cost = 0.0;           // k2

  friend bool operator==(const KpiVector&, const KpiVector&) = default;
};

inline constexpr std::size_t kNumConstraints = 6;

/// c1 = T_req - T_max(base speed); c2..c6 = geometry values G1..G5.
struct ConstraintVector {
  std::array<double, kNumConstraints> values{};

  friend bool operator==(const ConstraintVector&, const ConstraintVector&) = default;
};

/// Limits seen by the operating-point solver.
struct OperatingEnvelope {
  double i_max = 0.0;
  double u_max = 0.0;
  double r_s = 0.0;
  int pole_pairs = 1;
};

struct DriveLimits {
  double dc_link_voltage = drive_constants::kDcLinkVoltage;
  double u_max() const;
};

OperatingEnvelope make_envelope(const DesignVector& v, const DriveLimits& limits = {});

/// Bilinear interpolation of the normalized flux maps. Exact at grid nodes.
/// Throws OutOfQuadrant unless -I_max <= i_d <= 0 and 0 <= i_q <= I_max.
FluxLinkage interp_flux(const IntermediateMeasures& m, double i_max, double i_d, double i_q);

double torque(double psi_d, double psi_q, double i_d, double i_q, int pole_pairs);

double voltage_magnitude(double psi_d, double psi_q, double i_d, double i_q, double omega_e, double r_s);

double stator_resistance(const DesignVector& v);

struct Losses {
  double p_fe = 0.0;
  double p_cu = 0.0;
};

Losses losses(const IntermediateMeasures& m, double omega_e, double psi_d, double psi_q, double i_d, double i_q,
              double r_s);

/// Maximum torque over current angle 90..180 deg and amplitude <= I_max
/// subject to the voltage limit: 1 deg angle grid, then a golden-section
/// refinement between the neighbours of the best grid angle.
OperatingPoint max_torque(const IntermediateMeasures& m, const OperatingEnvelope& env, double omega_m);

OperatingPoint max_torque_at_speed(const IntermediateMeasures& m, const DesignVector& v, double omega_m,
                                   const DriveLimits& limits = {});

/// 33 equispaced mechanical speeds, 500..16000 rpm.
const std::array<double, drive_constants::kSpeedGridPoints>& speed_grid_rpm();

std::vector<OperatingPoint> torque_speed_curve(const IntermediateMeasures& m, const DesignVector& v,
                                               const DriveLimits& limits = {});

double material_cost(const DesignVector& v);

struct KpiResult {
  KpiVector kpis;
  ConstraintVector constraints;
};

KpiResult evaluate_kpis(const DesignVector& v, const IntermediateMeasures& m, const GeometryLimits& geometry = {},
                        const DriveLimits& limits = {});

/// Identifies the KPI/constraint definitions (constants and grids). Result
/// files from runs with different definitions must not be compared.
std::string kpi_definition_hash(const DriveLimits& limits = {});

}  // namespace pmsmopt
