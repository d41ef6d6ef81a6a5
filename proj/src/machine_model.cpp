#include "pmsmopt/machine_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pmsmopt/errors.hpp"

namespace pmsmopt {

namespace mc = machine_constants;

namespace {

constexpr double kMm = 1e-3;

}  // namespace

std::array<double, IntermediateMeasures::kFlatSize> IntermediateMeasures::flatten() const {
  std::array<double, kFlatSize> flat{};
  std::copy(psi_d.cells.begin(), psi_d.cells.end(), flat.begin());
  std::copy(psi_q.cells.begin(), psi_q.cells.end(), flat.begin() + kGridCells);
  flat[2 * kGridCells] = c_hy;
  flat[2 * kGridCells + 1] = c_ed;
  flat[2 * kGridCells + 2] = psi_ref;
  return flat;
}

IntermediateMeasures IntermediateMeasures::unflatten(std::span<const double> flat) {
  if (flat.size() != kFlatSize) throw FormatError("measures vector must have 165 entries");
  IntermediateMeasures m;
  std::copy(flat.begin(), flat.begin() + kGridCells, m.psi_d.cells.begin());
  std::copy(flat.begin() + kGridCells, flat.begin() + 2 * kGridCells, m.psi_q.cells.begin());
  m.c_hy = flat[2 * kGridCells];
  m.c_ed = flat[2 * kGridCells + 1];
  m.psi_ref = flat[2 * kGridCells + 2];
  return m;
}

MachineParameters machine_parameters(const DesignVector& v) {
  const auto g = derive_geometry(v);
  const double p = v.pole_pairs();
  const double tau_p = g.pole_pitch * kMm;
  const double l_stk = v[Param::stack_length] * kMm;
  const double r_rotor = v[Param::rotor_radius] * kMm;
  const double magnets = (v[Param::magnet1_thickness] + v[Param::magnet2_thickness]) * kMm;

  MachineParameters mp;
  mp.series_turns = v.turns() * 2.0 * p;
  const double kn = mc::kWindingFactor * mp.series_turns;
  const double phi_m =
      mc::kRemanence * mc::kLeakage * g.pole_arc_ratio * tau_p * l_stk * (2.0 / std::numbers::pi);
  mp.psi_pm = kn * phi_m;

  const double c_l = (3.0 / std::numbers::pi) * mc::kMu0;
  const double g_d = v[Param::air_gap] * kMm + magnets / mc::kRecoilPermeability;
  const double g_q = v[Param::air_gap] * kMm + mc::kQAxisMagnetShare * magnets / mc::kRecoilPermeability;
  const double l_common = c_l * kn * kn * r_rotor * l_stk / (p * p);
  mp.l_d = l_common / g_d;
  mp.l_q = l_common / g_q;
  mp.psi_sat = kn * mc::kSaturationFlux * tau_p * l_stk * (2.0 / std::numbers::pi);
  return mp;
}

double current_limit(const DesignVector& v) {
  const auto g = derive_geometry(v);
  return mc::kCurrentDensity * g.slot_area * geometry_constants::kFillFactor / v.turns();
}

FluxLinkage flux_linkage(const DesignVector& v, double i_d, double i_q) {
  const auto mp = machine_parameters(v);
  return {mp.psi_pm + mp.psi_sat * std::tanh(mp.l_d * i_d / mp.psi_sat),
          mp.psi_sat * std::tanh(mp.l_q * i_q / mp.psi_sat)};
}

LossCoefficients loss_coefficients(const DesignVector& v) {
  const auto g = derive_geometry(v);
  const double m_fe = mc::kIronDensity * g.iron_volume * 1e-9;
  const double b0 = mc::kRemanence * mc::kLeakage * g.pole_arc_ratio;
  return {mc::kHysteresisCoeff * m_fe * b0 * b0, mc::kEddyCoeff * m_fe * b0 * b0};
}

IntermediateMeasures evaluate_measures(const DesignVector& v) {
  const double i_max = current_limit(v);
  IntermediateMeasures m;
  for (int iw = 0; iw < kGridPoints; ++iw) {
    for (int iu = 0; iu < kGridPoints; ++iu) {
      const auto psi = flux_linkage(v, grid_u(iu) * i_max, grid_w(iw) * i_max);
      m.psi_d.at(iw, iu) = psi.psi_d;
      m.psi_q.at(iw, iu) = psi.psi_q;
    }
  }
  const auto loss = loss_coefficients(v);
  m.c_hy = loss.c_hy;
  m.c_ed = loss.c_ed;
  m.psi_ref = flux_linkage(v, 0.0, 0.0).psi_d;
  return m;
}

bool satisfies_invariants(const IntermediateMeasures& m) {
  if (!(m.c_hy >= 0.0 && m.c_ed >= 0.0 && m.psi_ref > 0.0)) return false;
  for (int iw = 0; iw < kGridPoints; ++iw) {
    for (int iu = 0; iu < kGridPoints; ++iu) {
      if (!std::isfinite(m.psi_d.at(iw, iu)) || !std::isfinite(m.psi_q.at(iw, iu))) return false;
      if (iu > 0 && m.psi_d.at(iw, iu) < m.psi_d.at(iw, iu - 1)) return false;
      if (iw > 0 && m.psi_q.at(iw, iu) < m.psi_q.at(iw - 1, iu)) return false;
    }
  }
  for (int iu = 0; iu < kGridPoints; ++iu) {
    if (m.psi_q.at(0, iu) != 0.0) return false;
  }
  return m.psi_d.at(0, kGridPoints - 1) == m.psi_ref;
}

}  // namespace pmsmopt
