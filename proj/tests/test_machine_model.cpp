#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pmsmopt/machine_model.hpp"
#include "support.hpp"

using namespace pmsmopt;

namespace {

constexpr double kPi = std::numbers::pi;

DesignVector reference_design() {
  auto v = testing::generous_design();
  v[Param::rotor_radius] = 65;
  v[Param::pole_pairs] = 3;
  v[Param::turns] = 8;
  v[Param::stack_length] = 90;
  return v;
}

struct HandParams {
  double psi_pm, psi_s, l_d, l_q;
};

// Closed-form chain evaluated independently of the library (SI units).
HandParams hand_params(const DesignVector& v) {
  const double p = v.values[0], r = v.values[1] * 1e-3, g = v.values[2] * 1e-3;
  const double w1 = v.values[6], a1 = v.values[8] * kPi / 180, w2 = v.values[9], a2 = v.values[11] * kPi / 180;
  const double t_sum = (v.values[7] + v.values[10]) * 1e-3;
  const double l = v.values[12] * 1e-3, nt = v.values[13];
  const double tau_mm = kPi * v.values[1] / p;
  const double beta = std::min(1.0, (w1 * std::cos(a1) + w2 * std::cos(a2)) / tau_mm);
  const double tau = tau_mm * 1e-3;
  const double n_ph = nt * 2 * p;
  const double kw = 0.933;
  const double phi = 1.2 * 0.9 * beta * tau * l * (2 / kPi);
  const double mu0 = 4e-7 * kPi;
  const double c_l = 3 / kPi * mu0;
  const double g_d = g + t_sum / 1.05;
  const double g_q = g + 0.3 * t_sum / 1.05;
  const double common = c_l * (kw * n_ph) * (kw * n_ph) * r * l / (p * p);
  return {kw * n_ph * phi, kw * n_ph * 1.8 * tau * l * (2 / kPi), common / g_d, common / g_q};
}

}  // namespace

TEST_CASE("current limit") {
  // r = 65, g = 1, slot depth 20: choose the tooth so that A_slot = 200 mm^2.
  auto v = reference_design();
  v[Param::air_gap] = 1.0;
  v[Param::slot_depth] = 20.0;
  const double sp = 2 * kPi * (65 + 1 + 10) / 18;
  v[Param::tooth_width] = sp - 10.0;
  CHECK(derive_geometry(v).slot_area == doctest::Approx(200.0).epsilon(1e-12));
  CHECK(current_limit(v) == doctest::Approx(135.0).epsilon(1e-12));

  auto doubled = v;
  doubled[Param::turns] = 16;
  CHECK(current_limit(doubled) == doctest::Approx(current_limit(v) / 2).epsilon(1e-14));

  v[Param::tooth_width] = sp;
  CHECK(current_limit(v) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("flux linkage closed form") {
  const auto v = reference_design();
  const auto hand = hand_params(v);
  const auto mp = machine_parameters(v);
  CHECK(mp.psi_pm == doctest::Approx(hand.psi_pm).epsilon(1e-12));
  CHECK(mp.psi_sat == doctest::Approx(hand.psi_s).epsilon(1e-12));
  CHECK(mp.l_d == doctest::Approx(hand.l_d).epsilon(1e-12));
  CHECK(mp.l_q == doctest::Approx(hand.l_q).epsilon(1e-12));

  const auto zero = flux_linkage(v, 0.0, 0.0);
  CHECK(zero.psi_d == hand.psi_pm);
  CHECK(zero.psi_q == 0.0);

  for (double i_d : {-120.0, -40.0, -5.0}) {
    for (double i_q : {0.0, 3.0, 60.0, 150.0}) {
      const auto f = flux_linkage(v, i_d, i_q);
      CHECK(f.psi_d == doctest::Approx(hand.psi_pm + hand.psi_s * std::tanh(hand.l_d * i_d / hand.psi_s)).epsilon(1e-12));
      CHECK(f.psi_q == doctest::Approx(hand.psi_s * std::tanh(hand.l_q * i_q / hand.psi_s)).epsilon(1e-12).scale(1e-9));
    }
  }
}

TEST_CASE("small q current is linear in L_q") {
  const auto v = reference_design();
  const auto mp = machine_parameters(v);
  const double i_q = 0.05 * mp.psi_sat / mp.l_q;
  CHECK(std::abs(mp.l_q * i_q) < 0.1 * mp.psi_sat);
  const auto f = flux_linkage(v, 0.0, i_q);
  CHECK(testing::rel_err(f.psi_q, mp.l_q * i_q) < 0.01);
}

TEST_CASE("loss coefficients") {
  const auto v = reference_design();
  const auto g = derive_geometry(v);
  const double m_fe = 7650.0 * g.iron_volume * 1e-9;
  const double b0 = 1.2 * 0.9 * g.pole_arc_ratio;
  const auto c = loss_coefficients(v);
  CHECK(c.c_hy == doctest::Approx(2.0e-2 * m_fe * b0 * b0).epsilon(1e-12));
  CHECK(c.c_ed == doctest::Approx(5.0e-5 * m_fe * b0 * b0).epsilon(1e-12));
  CHECK(c.c_hy / c.c_ed == doctest::Approx(400.0).epsilon(1e-12));

  // m_fe = 10 kg at B0 = 1 T.
  CHECK(2.0e-2 * 10.0 == doctest::Approx(0.2));
  CHECK(5.0e-5 * 10.0 == doctest::Approx(5.0e-4));

  // Magnets lying radially (90 deg) give beta = 0.
  auto radial = v;
  radial[Param::magnet1_angle] = 90;
  radial[Param::magnet2_angle] = 90;
  const auto zero = loss_coefficients(radial);
  CHECK(zero.c_hy == doctest::Approx(0.0).scale(1.0));
  CHECK(zero.c_ed == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("measures grid follows the normalized current grid") {
  const auto v = reference_design();
  const auto m = evaluate_measures(v);
  const double i_max = current_limit(v);
  const auto mp = machine_parameters(v);
  CHECK(m.psi_ref == mp.psi_pm);
  CHECK(m.psi_d.at(0, kGridPoints - 1) == m.psi_ref);
  CHECK(m.psi_q.at(0, kGridPoints - 1) == 0.0);
  for (int iw = 0; iw < kGridPoints; ++iw) {
    for (int iu = 0; iu < kGridPoints; ++iu) {
      const auto f = flux_linkage(v, grid_u(iu) * i_max, grid_w(iw) * i_max);
      CHECK(m.psi_d.at(iw, iu) == f.psi_d);
      CHECK(m.psi_q.at(iw, iu) == f.psi_q);
    }
  }
  const auto lc = loss_coefficients(v);
  CHECK(m.c_hy == lc.c_hy);
  CHECK(m.c_ed == lc.c_ed);
  CHECK(grid_u(0) == -1.0);
  CHECK(grid_u(8) == 0.0);
  CHECK(grid_w(4) == 0.5);
}

TEST_CASE("measure invariants over a 1000-design sweep") {
  const auto designs = testing::feasible_designs(1000, 77);
  for (const auto& v : designs) {
    const auto m = evaluate_measures(v);
    CHECK(satisfies_invariants(m));
    for (int iw = 0; iw < kGridPoints; ++iw) {
      for (int iu = 0; iu + 1 < kGridPoints; ++iu) CHECK(m.psi_d.at(iw, iu) <= m.psi_d.at(iw, iu + 1));
    }
    for (int iu = 0; iu < kGridPoints; ++iu) {
      CHECK(m.psi_q.at(0, iu) == 0.0);
      for (int iw = 0; iw + 1 < kGridPoints; ++iw) CHECK(m.psi_q.at(iw, iu) <= m.psi_q.at(iw + 1, iu));
    }
    CHECK(m.psi_ref > 0.0);
    CHECK(m.c_hy >= 0.0);
    CHECK(m.c_ed >= 0.0);

    const auto mp = machine_parameters(v);
    CHECK(mp.l_q > mp.l_d);
    const double i_max = current_limit(v);
    const auto pos = flux_linkage(v, -0.3 * i_max, 0.7 * i_max);
    const auto neg = flux_linkage(v, -0.3 * i_max, -0.7 * i_max);
    CHECK(pos.psi_q == -neg.psi_q);
    CHECK(std::abs(pos.psi_d - mp.psi_pm) < mp.psi_sat);
    CHECK(std::abs(pos.psi_q) < mp.psi_sat);
  }
}

TEST_CASE("evaluate_measures is deterministic and scales with stack length") {
  const auto v = reference_design();
  CHECK(evaluate_measures(v) == evaluate_measures(v));

  auto longer = v;
  longer[Param::stack_length] = v[Param::stack_length] * 1.25;
  const auto a = evaluate_measures(v).flatten();
  const auto b = evaluate_measures(longer).flatten();
  for (std::size_t k = 0; k < IntermediateMeasures::kFluxOutputs + 1; ++k) {
    const std::size_t idx = k < IntermediateMeasures::kFluxOutputs ? k : IntermediateMeasures::kFlatSize - 1;
    if (a[idx] == 0.0) {
      CHECK(b[idx] == 0.0);
    } else {
      CHECK(testing::rel_err(b[idx], 1.25 * a[idx]) < 1e-12);
    }
  }
}

TEST_CASE("flatten round trip") {
  const auto m = evaluate_measures(reference_design());
  const auto flat = m.flatten();
  CHECK(flat.size() == 165);
  CHECK(IntermediateMeasures::unflatten(flat) == m);
  CHECK(flat[0] == m.psi_d.at(0, 0));
  CHECK(flat[81] == m.psi_q.at(0, 0));
  CHECK(flat[164] == m.psi_ref);
}
