#include "pmsmopt/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pmsmopt/errors.hpp"
#include "pmsmopt/io.hpp"

namespace pmsmopt {

namespace dc = drive_constants;

double rpm_to_rad_per_s(double rpm) { return rpm * 2.0 * std::numbers::pi / 60.0; }

double DriveLimits::u_max() const { return dc_link_voltage / std::sqrt(3.0); }

OperatingEnvelope make_envelope(const DesignVector& v, const DriveLimits& limits) {
  return {current_limit(v), limits.u_max(), stator_resistance(v), v.pole_pairs()};
}

namespace {

constexpr double kLastCell = kGridPoints - 1;

// Cell index and in-cell fraction for a normalized coordinate x in [0, 8].
std::pair<int, double> locate(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) < 1e-9) x = nearest;
  int cell = static_cast<int>(std::floor(x));
  cell = std::clamp(cell, 0, kGridPoints - 2);
  return {cell, x - cell};
}

double bilinear(const FluxGrid& grid, int iw, double s, int iu, double t) {
  const double lower = (1.0 - t) * grid.at(iw, iu) + t * grid.at(iw, iu + 1);
  const double upper = (1.0 - t) * grid.at(iw + 1, iu) + t * grid.at(iw + 1, iu + 1);
  return (1.0 - s) * lower + s * upper;
}

}  // namespace

FluxLinkage interp_flux(const IntermediateMeasures& m, double i_max, double i_d, double i_q) {
  const double tol = 1e-12 * std::max(i_max, 1.0);
  if (!(i_d <= tol && i_q >= -tol && i_d >= -i_max - tol && i_q <= i_max + tol)) {
    std::ostringstream msg;
    msg << "currents (i_d=" << i_d << ", i_q=" << i_q << ") outside modeled quadrant for I_max=" << i_max;
    throw OutOfQuadrant(msg.str());
  }
  if (i_max <= 0.0) return {m.psi_d.at(0, kGridPoints - 1), m.psi_q.at(0, kGridPoints - 1)};

  const double x = std::clamp((i_d / i_max + 1.0) * kLastCell, 0.0, kLastCell);
  const double y = std::clamp((i_q / i_max) * kLastCell, 0.0, kLastCell);
  const auto [iu, t] = locate(x);
  const auto [iw, s] = locate(y);
  return {bilinear(m.psi_d, iw, s, iu, t), bilinear(m.psi_q, iw, s, iu, t)};
}

double torque(double psi_d, double psi_q, double i_d, double i_q, int pole_pairs) {
  return 1.5 * pole_pairs * (psi_d * i_q - psi_q * i_d);
}

double voltage_magnitude(double psi_d, double psi_q, double i_d, double i_q, double omega_e, double r_s) {
  const double u_d = r_s * i_d - omega_e * psi_q;
  const double u_q = r_s * i_q + omega_e * psi_d;
  return std::sqrt(u_d * u_d + u_q * u_q);
}

double stator_resistance(const DesignVector& v) {
  const auto g = derive_geometry(v);
  const double n_ph = v.turns() * 2.0 * v.pole_pairs();
  const double l_turn = 2.0 * (v[Param::stack_length] + geometry_constants::kEndWindingFactor * g.pole_pitch) * 1e-3;
  const double a_cond = g.slot_area * geometry_constants::kFillFactor / (2.0 * v.turns()) * 1e-6;
  return dc::kCopperResistivity * n_ph * l_turn / a_cond;
}

Losses losses(const IntermediateMeasures& m, double omega_e, double psi_d, double psi_q, double i_d, double i_q,
              double r_s) {
  const double f = omega_e / (2.0 * std::numbers::pi);
  const double flux_ratio = (psi_d * psi_d + psi_q * psi_q) / (m.psi_ref * m.psi_ref);
  return {(m.c_hy * f + m.c_ed * f * f) * flux_ratio, 1.5 * r_s * (i_d * i_d + i_q * i_q)};
}

namespace {

OperatingPoint make_point(const IntermediateMeasures& m, const OperatingEnvelope& env, double omega_m, double i_d,
                          double i_q) {
  const double omega_e = env.pole_pairs * omega_m;
  const auto psi = interp_flux(m, env.i_max, i_d, i_q);
  OperatingPoint op;
  op.omega_m = omega_m;
  op.i_d = i_d;
  op.i_q = i_q;
  op.psi_d = psi.psi_d;
  op.psi_q = psi.psi_q;
  op.torque = torque(psi.psi_d, psi.psi_q, i_d, i_q, env.pole_pairs);
  op.u_mag = voltage_magnitude(psi.psi_d, psi.psi_q, i_d, i_q, omega_e, env.r_s);
  const auto loss = losses(m, omega_e, psi.psi_d, psi.psi_q, i_d, i_q, env.r_s);
  op.p_fe = loss.p_fe;
  op.p_cu = loss.p_cu;
  op.p_shaft = op.torque * omega_m - op.p_fe;
  return op;
}

}  // namespace

OperatingPoint max_torque(const IntermediateMeasures& m, const OperatingEnvelope& env, double omega_m) {
  const double omega_e = env.pole_pairs * omega_m;
  const double i_max = std::max(env.i_max, 0.0);

  struct Candidate {
    bool ok = false;
    double torque = -HUGE_VAL;
    double i_d = 0.0;
    double i_q = 0.0;
  };

  // Largest voltage-feasible amplitude along one current angle, and its torque.
  auto along = [&](double gamma) {
    const double cos_g = std::min(std::cos(gamma), 0.0);
    const double sin_g = std::clamp(std::sin(gamma), 0.0, 1.0);

    auto within_voltage = [&](double amp) {
      const double i_d = amp * cos_g;
      const double i_q = amp * sin_g;
      const auto psi = interp_flux(m, i_max, i_d, i_q);
      return voltage_magnitude(psi.psi_d, psi.psi_q, i_d, i_q, omega_e, env.r_s) <= env.u_max;
    };

    double amp = i_max;
    if (!within_voltage(i_max)) {
      // Voltage is not monotone in the amplitude once d-axis current weakens
      // the field, so bracket the largest feasible amplitude from above on a
      // coarse scan before bisecting.
      int step = dc::kCurrentScanSteps - 1;
      while (step >= 0 && !within_voltage(i_max * step / dc::kCurrentScanSteps)) --step;
      if (step < 0) return Candidate{};
      double lo = i_max * step / dc::kCurrentScanSteps;
      double hi = i_max * (step + 1) / dc::kCurrentScanSteps;
      for (int it = 0; it < dc::kBisectionIterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (within_voltage(mid)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      amp = lo;
    }

    Candidate c{true, 0.0, amp * cos_g, amp * sin_g};
    const auto psi = interp_flux(m, i_max, c.i_d, c.i_q);
    c.torque = torque(psi.psi_d, psi.psi_q, c.i_d, c.i_q, env.pole_pairs);
    return c;
  };

  constexpr double kHalfPi = std::numbers::pi / 2.0;
  constexpr double kStep = kHalfPi / (dc::kCurrentAngleSteps - 1);
  Candidate best;
  double best_gamma = kHalfPi;
  for (int k = 0; k < dc::kCurrentAngleSteps; ++k) {
    const double gamma = kHalfPi * (1.0 + static_cast<double>(k) / (dc::kCurrentAngleSteps - 1));
    const auto c = along(gamma);
    if (c.ok && (!best.ok || c.torque > best.torque)) {
      best = c;
      best_gamma = gamma;
    }
  }

  // Where the current and voltage limits meet, torque is steep in the angle
  // and the grid alone is off by several percent: refine between neighbours.
  if (best.ok) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = std::max(kHalfPi, best_gamma - kStep);
    double b = std::min(2.0 * kHalfPi, best_gamma + kStep);
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    auto c1 = along(x1);
    auto c2 = along(x2);
    for (int it = 0; it < dc::kAngleRefineIterations; ++it) {
      if (c1.torque >= c2.torque) {
        b = x2;
        x2 = x1;
        c2 = c1;
        x1 = b - kInvPhi * (b - a);
        c1 = along(x1);
      } else {
        a = x1;
        x1 = x2;
        c1 = c2;
        x2 = a + kInvPhi * (b - a);
        c2 = along(x2);
      }
    }
    for (const auto& c : {c1, c2}) {
      if (c.ok && c.torque > best.torque) best = c;
    }
  }
  const bool found = best.ok;
  const double best_id = best.i_d;
  const double best_iq = best.i_q;

  if (!found) {
    auto op = make_point(m, env, omega_m, 0.0, 0.0);
    op.feasible = false;
    return op;
  }
  return make_point(m, env, omega_m, best_id, best_iq);
}

OperatingPoint max_torque_at_speed(const IntermediateMeasures& m, const DesignVector& v, double omega_m,
                                   const DriveLimits& limits) {
  return max_torque(m, make_envelope(v, limits), omega_m);
}

const std::array<double, dc::kSpeedGridPoints>& speed_grid_rpm() {
  static const auto grid = [] {
    std::array<double, dc::kSpeedGridPoints> g{};
    for (std::size_t k = 0; k < g.size(); ++k) {
      g[k] = dc::kGridMinRpm + (dc::kGridMaxRpm - dc::kGridMinRpm) * static_cast<double>(k) / (g.size() - 1);
    }
    return g;
  }();
  return grid;
}

std::vector<OperatingPoint> torque_speed_curve(const IntermediateMeasures& m, const DesignVector& v,
                                               const DriveLimits& limits) {
  const auto env = make_envelope(v, limits);
  std::vector<OperatingPoint> curve;
  curve.reserve(dc::kSpeedGridPoints);
  for (double rpm : speed_grid_rpm()) curve.push_back(max_torque(m, env, rpm_to_rad_per_s(rpm)));
  return curve;
}

double material_cost(const DesignVector& v) {
  namespace cc = cost_constants;
  const auto g = derive_geometry(v);
  constexpr double kMm3 = 1e-9;
  return cc::kMagnetPrice * cc::kMagnetDensity * g.magnet_volume * kMm3 +
         cc::kCopperPrice * cc::kCopperDensity * g.copper_volume * kMm3 +
         cc::kIronPrice * cc::kIronDensity * g.iron_volume * kMm3;
}

KpiResult evaluate_kpis(const DesignVector& v, const IntermediateMeasures& m, const GeometryLimits& geometry,
                        const DriveLimits& limits) {
  const auto env = make_envelope(v, limits);
  double max_power = -HUGE_VAL;
  for (double rpm : speed_grid_rpm()) {
    max_power = std::max(max_power, max_torque(m, env, rpm_to_rad_per_s(rpm)).p_shaft);
  }
  const auto base = max_torque(m, env, rpm_to_rad_per_s(dc::kBaseSpeedRpm));
  const auto report = geometry_check(v, geometry);

  KpiResult r;
  r.kpis.neg_max_power = -max_power;
  r.kpis.cost = material_cost(v);
  r.constraints.values[0] = dc::kRequiredTorque - base.torque;
  for (std::size_t k = 0; k < kNumGeometryChecks; ++k) r.constraints.values[k + 1] = report.values[k];
  return r;
}

std::string kpi_definition_hash(const DriveLimits& limits) {
  namespace cc = cost_constants;
  std::ostringstream def;
  def << "kpi-v2;udc=" << format_double(limits.dc_link_voltage) << ";treq=" << format_double(dc::kRequiredTorque)
      << ";base_rpm=" << format_double(dc::kBaseSpeedRpm) << ";grid=" << format_double(dc::kGridMinRpm) << ":"
      << format_double(dc::kGridMaxRpm) << ":" << dc::kSpeedGridPoints << ";angles=" << dc::kCurrentAngleSteps
      << ";bisect=" << dc::kBisectionIterations << ";scan=" << dc::kCurrentScanSteps << ";refine=" << dc::kAngleRefineIterations
      << ";rho_cu=" << format_double(dc::kCopperResistivity) << ";prices=" << format_double(cc::kMagnetPrice) << ","
      << format_double(cc::kCopperPrice) << "," << format_double(cc::kIronPrice)
      << ";p_shaft=T*w-p_fe;k1=-max_p_shaft;k2=cost";
  return hex64(fnv1a64(def.str()));
}

}  // namespace pmsmopt
