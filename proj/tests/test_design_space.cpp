#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pmsmopt/design_space.hpp"
#include "pmsmopt/errors.hpp"
#include "support.hpp"

using namespace pmsmopt;

namespace {

constexpr double kPi = std::numbers::pi;
double rad(double deg) { return deg * kPi / 180.0; }

// Hand evaluation of the five inequalities, written out term by term.
std::array<double, 5> geometry_oracle(const DesignVector& v) {
  const double p = v.values[0], r = v.values[1], g = v.values[2], sd = v.values[3], yoke = v.values[4];
  const double tw = v.values[5], w1 = v.values[6], t1 = v.values[7], a1 = rad(v.values[8]);
  const double w2 = v.values[9], t2 = v.values[10], a2 = rad(v.values[11]);
  const double d1 = 0.60 * r, d2 = 0.78 * r;
  const double sp = 2.0 * kPi * (r + g + sd / 2.0) / (6.0 * p);
  const double g1 = std::max(d1 + w1 / 2.0 * std::sin(a1) + t1 + 1.5 - r, d2 + w2 / 2.0 * std::sin(a2) + t2 + 1.5 - r);
  const double g2 = std::max(w1 * std::cos(a1) + 3.0 - 2.0 * d1 * std::sin(kPi / (2.0 * p)),
                             w2 * std::cos(a2) + 3.0 - 2.0 * d2 * std::sin(kPi / (2.0 * p)));
  const double g3 = d1 + w1 / 2.0 * std::sin(a1) + t1 + 2.0 - d2;
  const double g4 = 2.0 - (sp - tw);
  const double g5 = r + g + sd + yoke - 120.0;
  return {g1, g2, g3, g4, g5};
}

}  // namespace

TEST_CASE("default spec bounds") {
  const auto spec = DesignSpec::defaults();
  CHECK_NOTHROW(spec.validate());
  CHECK(spec[Param::pole_pairs].lower == 3);
  CHECK(spec[Param::pole_pairs].upper == 4);
  CHECK(spec[Param::pole_pairs].kind == ParamKind::integer);
  CHECK(spec[Param::turns].lower == 4);
  CHECK(spec[Param::turns].upper == 12);
  CHECK(spec[Param::rotor_radius].lower == 50);
  CHECK(spec[Param::rotor_radius].upper == 80);
  CHECK(spec[Param::stack_length].upper == 120);
  CHECK(spec.index_of("a2_deg") == 11);
  CHECK(spec.index_of("bogus") == kNumParams);
}

TEST_CASE("spec validation rejects bad bounds") {
  auto spec = DesignSpec::defaults();
  spec[Param::air_gap].lower = 2.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = DesignSpec::defaults();
  spec[Param::turns].upper = 10.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("clamp_to_bounds") {
  const auto spec = DesignSpec::defaults();
  const auto v = testing::generous_design();
  CHECK(clamp_to_bounds(v.span(), spec) == v);

  auto raw = v.values;
  raw[1] = 85;
  raw[13] = 7.6;
  const auto c = clamp_to_bounds(raw, spec);
  CHECK(c[Param::rotor_radius] == 80);
  CHECK(c[Param::turns] == 8);
  raw[13] = 6.5;
  CHECK(clamp_to_bounds(raw, spec)[Param::turns] == 7);

  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    std::array<double, kNumParams> x{};
    for (auto& e : x) e = rng.uniform(-50, 200);
    const auto once = clamp_to_bounds(x, spec);
    CHECK(clamp_to_bounds(once.span(), spec) == once);
    CHECK(within_bounds(once, spec));
  }
}

TEST_CASE("derive_geometry examples") {
  auto v = testing::generous_design();
  v[Param::rotor_radius] = 60;
  const auto g = derive_geometry(v);
  CHECK(g.n_slots == 18);
  CHECK(g.pole_pitch == doctest::Approx(62.832).epsilon(1e-5));
  CHECK(g.anchor1 == doctest::Approx(36.0));
  CHECK(g.anchor2 == doctest::Approx(46.8));

  v[Param::magnet1_width] = 30;
  v[Param::magnet1_thickness] = 5;
  v[Param::magnet2_width] = 20;
  v[Param::magnet2_thickness] = 4;
  v[Param::stack_length] = 100;
  CHECK(derive_geometry(v).magnet_volume == doctest::Approx(138000.0));

  v[Param::pole_pairs] = 4;
  CHECK(derive_geometry(v).n_slots == 24);
}

TEST_CASE("derived volumes match the hand formulas") {
  const auto v = testing::generous_design();
  const auto g = derive_geometry(v);
  const double tau = kPi * 80 / 3;
  const double sp = 2 * kPi * (80 + 0.8 + 10) / 18;
  const double a_slot = 20 * (sp - 6);
  const double beta = std::min(1.0, (10 * std::cos(rad(20)) + 10 * std::cos(rad(20))) / tau);
  const double v_mag = 2 * 3 * (10 * 3 + 10 * 3) * 100.0;
  const double v_cu = 18 * a_slot * 0.45 * (100 + 2.2 * tau);
  const double r_out = 80 + 0.8 + 20 + 12;
  const double v_fe = kPi * (r_out * r_out - 55.0 * 55.0) * 100 - 18 * a_slot * 100 - v_mag;
  CHECK(g.slot_area == doctest::Approx(a_slot).epsilon(1e-12));
  CHECK(g.pole_arc_ratio == doctest::Approx(beta).epsilon(1e-12));
  CHECK(g.copper_volume == doctest::Approx(v_cu).epsilon(1e-12));
  CHECK(g.iron_volume == doctest::Approx(v_fe).epsilon(1e-12));
  CHECK(g.outer_radius == doctest::Approx(r_out));
}

TEST_CASE("G1 example: layer 1 breaks through the rotor surface") {
  auto v = testing::generous_design();
  v[Param::rotor_radius] = 60;
  v[Param::magnet1_width] = 40;
  v[Param::magnet1_angle] = 60;
  v[Param::magnet1_thickness] = 6;
  v[Param::magnet2_width] = 8;
  const auto rep = geometry_check(v);
  CHECK(rep.values[0] == doctest::Approx(0.820).epsilon(1e-3));
  CHECK(rep.violations[0] == doctest::Approx(0.820).epsilon(1e-3));
  CHECK_FALSE(rep.feasible);
}

TEST_CASE("generous design is feasible on all five checks") {
  const auto rep = geometry_check(testing::generous_design());
  CHECK(rep.feasible);
  for (double x : rep.values) CHECK(x < 0.0);
  CHECK(rep.total_violation == 0.0);
}

TEST_CASE("geometry_check agrees with the hand oracle and its own invariants") {
  const auto spec = DesignSpec::defaults();
  Rng rng(11);
  int feasible = 0;
  for (int k = 0; k < 2000; ++k) {
    const auto v = testing::random_in_bounds(spec, rng);
    const auto rep = geometry_check(v);
    const auto oracle = geometry_oracle(v);
    double total = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(rep.values[i] == doctest::Approx(oracle[i]).epsilon(1e-12).scale(1.0));
      CHECK(rep.violations[i] >= 0.0);
      total += std::max(0.0, oracle[i]);
    }
    CHECK(rep.total_violation == doctest::Approx(total).epsilon(1e-12).scale(1.0));
    CHECK(rep.feasible == (rep.total_violation == 0.0));
    feasible += rep.feasible;

    const auto g = derive_geometry(v);
    CHECK(g.pole_arc_ratio >= 0.0);
    CHECK(g.pole_arc_ratio <= 1.0);
    CHECK((g.n_slots == 18 || g.n_slots == 24));
    if (rep.feasible) {
      CHECK(g.slot_area >= 0.0);
      CHECK(g.copper_volume >= 0.0);
      CHECK(g.iron_volume >= 0.0);
    }

    const auto again = geometry_check(v);
    CHECK(again.values == rep.values);

    // Thicker layer-1 magnets never relax G1.
    auto thicker = v;
    thicker[Param::magnet1_thickness] = std::min(8.0, v[Param::magnet1_thickness] + 1.0);
    CHECK(geometry_check(thicker).values[0] >= rep.values[0]);
  }
  CHECK(feasible > 0);
}

TEST_CASE("design_spec_hash tracks bounds and limits") {
  const auto a = DesignSpec::defaults();
  auto b = a;
  CHECK(design_spec_hash(a) == design_spec_hash(b));
  b[Param::stack_length].upper = 121;
  CHECK(design_spec_hash(a) != design_spec_hash(b));
  b = a;
  b.limits.outer_radius_max = 110;
  CHECK(design_spec_hash(a) != design_spec_hash(b));
}
