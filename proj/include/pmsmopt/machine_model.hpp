#pragma once

// Analytical dq reference model. Plays the role of the magneto-static field
// solver: maps a design to its intermediate measures (flux-linkage maps on a
// normalized current grid plus iron-loss coefficients). SI units throughout
// except where a design parameter is read in mm.

#include <array>
#include <cstddef>
#include <span>

#include "pmsmopt/design_space.hpp"

namespace pmsmopt {

namespace machine_constants {
inline constexpr double kMu0 = 4.0e-7 * 3.14159265358979323846;
inline constexpr double kWindingFactor = 0.933;
inline constexpr double kRemanence = 1.2;      // B_r [T]
inline constexpr double kLeakage = 0.9;        // k_leak
inline constexpr double kRecoilPermeability = 1.05;
inline constexpr double kQAxisMagnetShare = 0.3;
inline constexpr double kSaturationFlux = 1.8;  // B_sat [T]
inline constexpr double kCurrentDensity = 12.0;  // J_max [A/mm^2, peak]
inline constexpr double kIronDensity = 7650.0;   // [kg/m^3]
inline constexpr double kHysteresisCoeff = 2.0e-2;  // k_h [W/(kg Hz T^2)]
inline constexpr double kEddyCoeff = 5.0e-5;        // k_e [W/(kg Hz^2 T^2)]
}  // namespace machine_constants

inline constexpr int kGridPoints = 9;
inline constexpr std::size_t kGridCells = kGridPoints * kGridPoints;

/// 9x9 map indexed [iw][iu]: rows follow w = i_q/I_max in {0, 1/8, ..., 1},
/// columns follow u = i_d/I_max in {-1, -7/8, ..., 0}. Stored row-major.
struct FluxGrid {
  std::array<double, kGridCells> cells{};

  double& at(int iw, int iu) { return cells[static_cast<std::size_t>(iw * kGridPoints + iu)]; }
  double at(int iw, int iu) const { return cells[static_cast<std::size_t>(iw * kGridPoints + iu)]; }

  friend bool operator==(const FluxGrid&, const FluxGrid&) = default;
};

inline constexpr double grid_u(int iu) { return -1.0 + static_cast<double>(iu) / (kGridPoints - 1); }
inline constexpr double grid_w(int iw) { return static_cast<double>(iw) / (kGridPoints - 1); }

struct IntermediateMeasures {
  FluxGrid psi_d;  // [V s]
  FluxGrid psi_q;  // [V s]
  double c_hy = 0.0;     // [W/Hz]
  double c_ed = 0.0;     // [W/Hz^2]
  double psi_ref = 0.0;  // open-circuit flux linkage [V s]

  static constexpr std::size_t kFlatSize = 2 * kGridCells + 3;
  static constexpr std::size_t kFluxOutputs = 2 * kGridCells;
  static constexpr std::size_t kScalarOutputs = 3;

  /// psi_d cells, psi_q cells, c_hy, c_ed, psi_ref.
  std::array<double, kFlatSize> flatten() const;
  static IntermediateMeasures unflatten(std::span<const double> flat);

  friend bool operator==(const IntermediateMeasures&, const IntermediateMeasures&) = default;
};

/// Lumped dq parameters of a design.
struct MachineParameters {
  double series_turns = 0.0;  // N_ph
  double psi_pm = 0.0;        // [V s]
  double l_d = 0.0;           // [H]
  double l_q = 0.0;           // [H]
  double psi_sat = 0.0;       // saturation scale psi_s [V s]
};

MachineParameters machine_parameters(const DesignVector& v);

/// Peak phase-current limit [A].
double current_limit(const DesignVector& v);

struct FluxLinkage {
  double psi_d = 0.0;
  double psi_q = 0.0;
};

FluxLinkage flux_linkage(const DesignVector& v, double i_d, double i_q);

struct LossCoefficients {
  double c_hy = 0.0;
  double c_ed = 0.0;
};

LossCoefficients loss_coefficients(const DesignVector& v);

IntermediateMeasures evaluate_measures(const DesignVector& v);

/// Monotonicity, zero-row, corner and sign invariants of a measures record.
bool satisfies_invariants(const IntermediateMeasures& m);

}  // namespace pmsmopt
