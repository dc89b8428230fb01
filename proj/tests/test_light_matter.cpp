#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qlmi/error.hpp"
#include "qlmi/light_matter.hpp"
#include "support.hpp"

#include <cmath>
#include <functional>

using namespace qlmi;
using namespace qlmi::maps;
using support::max_abs;

namespace {

// Per-sector matrix of the two-cell relations in slot order (A, R) written
// out from the input-output relations.
Matrix two_cell_block(double z, double swap_time) {
  const double e = std::exp(-swap_time);
  const double s = std::sqrt(1.0 - e * e);
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = e;          // x_A ← e x_A
  m(0, 3) = s * z;      //     + sZ p_+
  m(1, 1) = e;          // p_A ← e p_A
  m(1, 2) = -s / z;     //     − (s/Z) x_+
  m(2, 2) = e;          // x_- ← e x_+
  m(2, 1) = s * z;      //     + sZ p_A
  m(3, 3) = e;          // p_- ← e p_+
  m(3, 0) = -s / z;     //     − (s/Z) x_A
  return m;
}

Matrix two_sectors(const Matrix& block) {
  Matrix m = Matrix::Zero(8, 8);
  m.block(0, 0, 4, 4) = block;
  m.block(4, 4, 4, 4) = block;
  return m;
}

}  // namespace

TEST_CASE("coupling constants") {
  CHECK(kappa_finite(2.5, 0.3) == doctest::Approx(std::sqrt(1.0 - std::exp(-0.6)) * 2.5).epsilon(1e-15));
  CHECK(kappa_qnd(2.5, 0.3) == doctest::Approx(std::sqrt(0.6) * 2.5).epsilon(1e-15));
  // κ_finite/κ_qnd − 1 = O(γs T)
  for (double t : {1e-2, 1e-3, 1e-4}) {
    const double rel = std::abs(kappa_finite(3.0, t) / kappa_qnd(3.0, t) - 1.0);
    CHECK(rel < t);
    CHECK(rel > 0.25 * t);
  }
  for (double k : {0.1, 1.0, 2.4}) {
    const double t = swap_time_for_kappa(2.5, k);
    CHECK(kappa_finite(2.5, t) == doctest::Approx(k).epsilon(1e-13));
  }
  CHECK_THROWS_AS(swap_time_for_kappa(2.5, 2.5), Error);
  const auto c = coupling_params(2.5, 1.0, 0.2);
  CHECK(c.mu * c.mu - c.nu * c.nu == doctest::Approx(1.0));
  CHECK(c.mu + c.nu == doctest::Approx(2.5));
  CHECK_THROWS_AS(coupling_params(0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(coupling_params(2.0, -1.0, 1.0), Error);
  CHECK_THROWS_AS(coupling_params(2.0, 1.0, 0.0), Error);
}

TEST_CASE("QND single pass relations") {
  const ModeId a{"A", ModeKind::Atomic};
  const ModeId l{"L", ModeKind::LightCos};
  const auto in = displace(displace(vacuum({a, l}), "A", 0.3, 1.7), "L", -0.4, 2.0);
  const auto out = apply_map(in, qnd_single_pass(0.8, a, l));
  CHECK(out.mean_of("A", Quadrature::X) == doctest::Approx(0.3 + 0.8 * 2.0));
  CHECK(out.mean_of("L", Quadrature::X) == doctest::Approx(-0.4 + 0.8 * 1.7));
  CHECK(out.mean_of("A", Quadrature::P) == doctest::Approx(1.7));
  CHECK(out.mean_of("L", Quadrature::P) == doctest::Approx(2.0));
  // Back-action: var x_L = ½(1 + κ²).
  CHECK(out.variance("L", Quadrature::X) == doctest::Approx(0.5 * (1.0 + 0.64)));
}

TEST_CASE("two-cell QND acts independently on both sectors") {
  const auto m = qnd_two_cell(1.3).matrix();
  CHECK(m.block(0, 4, 4, 4).isZero());
  CHECK(m.block(4, 0, 4, 4).isZero());
  CHECK(m(0, 3) == doctest::Approx(1.3));
  CHECK(m(2, 1) == doctest::Approx(1.3));
}

TEST_CASE("non-QND two-cell map equals the written relations") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const double z = support::uniform(rng, 0.2, 20.0);
    const double t = support::uniform(rng, 0.0, 3.0);
    const auto map = nonqnd_two_cell({z, 1.0, t, 0.0});
    CHECK(max_abs(map.matrix() - two_sectors(two_cell_block(z, t))) < 1e-14);
  }
  const auto map = nonqnd_two_cell({2.5, 1.0, 0.5, 0.0});
  CHECK(map.input_modes()[1].label == "R+_cos");
  CHECK(map.output_modes()[1].label == "R-_cos");
}

TEST_CASE("long-time limit") {
  const double z = 2.5;
  const Matrix limit = long_time_limit(z).matrix();
  // The gap to the finite map is e^{-γsT} on the diagonal plus O(e^{-2γsT}).
  const double gap20 = max_abs(nonqnd_two_cell({z, 1.0, 20.0, 0.0}).matrix() - limit);
  CHECK(gap20 == doctest::Approx(std::exp(-20.0)).epsilon(1e-6));
  CHECK(max_abs(nonqnd_two_cell({z, 1.0, 21.0, 0.0}).matrix() - limit) < 1e-9);
  CHECK(max_abs(nonqnd_two_cell({z, 1.0, 40.0, 0.0}).matrix() - limit) < 1e-15);
  // Swap: x_A' = Z p_+, p_A' = −x_+/Z.
  CHECK(limit(0, 3) == doctest::Approx(z));
  CHECK(limit(1, 2) == doctest::Approx(-1.0 / z));
}

TEST_CASE("QND limit of the non-QND map") {
  for (double kappa : {0.5, 1.0, 2.0}) {
    const double z = 1e3;
    const double t = swap_time_for_kappa(z, kappa);
    const double gap = max_abs(nonqnd_two_cell({z, 1.0, t, 0.0}).matrix() - qnd_two_cell(kappa).matrix());
    CHECK(gap < 1e-3);
    CHECK(gap < 2.0 * kappa / z);
  }
}

TEST_CASE("symplectic suite over random parameters") {
  std::mt19937_64 rng(6);
  const ModeId a{"A", ModeKind::Atomic};
  const ModeId l{"L", ModeKind::LightCos};
  const ModeId r{"R", ModeKind::ReadingMode};
  const ModeId us{"us", ModeKind::LightSidebandUpper};
  const ModeId ls{"ls", ModeKind::LightSidebandLower};
  const ModeId rc{"Rc", ModeKind::ReadingMode};

  double worst = 0.0;
  const auto track = [&](const SymplecticMap& m) { worst = std::max(worst, m.symplectic_defect()); };
  for (int draw = 0; draw < 1000; ++draw) {
    const double z = std::exp(support::uniform(rng, std::log(0.05), std::log(1e3)));
    const double t = support::uniform(rng, 0.0, 10.0);
    const double kappa = support::uniform(rng, 0.0, 5.0);
    const InteractionParams p{z, support::uniform(rng, 0.1, 10.0), t, 2.0 * 3.14159 * 3e5};
    track(qnd_single_pass(kappa, a, l));
    track(qnd_two_cell(kappa));
    track(nonqnd_two_cell(p));
    track(long_time_limit(z));
    track(reading_mode_combination(z, us, ls, r, rc));
    // Sideband entries grow like μ², so double rounding leaves ~μ⁴ε in SΩSᵀ;
    // the single-cell sideband map is drawn over Z ≤ 30.
    const double z_side = std::exp(support::uniform(rng, std::log(0.05), std::log(30.0)));
    track(nonqnd_single_cell({z_side, p.gamma_s, p.duration, p.omega}));
    track(nonqnd_single_cell_reading(p, a, r));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("single-cell sideband map stays symplectic relative to its size at large Z") {
  for (double z : {100.0, 1e3}) {
    const auto m = nonqnd_single_cell({z, 1.0, 1.0, 0.0});
    const double size = max_abs(m.matrix());
    CHECK(m.symplectic_defect() < 1e-14 * size * size);
  }
}

TEST_CASE("single-cell reading-mode beamsplitter") {
  const InteractionParams p{2.5, 1.0, 0.7, 0.0};
  const ModeId a{"A", ModeKind::Atomic};
  const ModeId r{"R", ModeKind::ReadingMode};
  const auto m = nonqnd_single_cell_reading(p, a, r).matrix();
  const double e = std::exp(-0.7);
  const double s = std::sqrt(1.0 - e * e);
  CHECK(m(0, 0) == doctest::Approx(e));
  CHECK(m(0, 2) == doctest::Approx(s));
  CHECK(m(2, 0) == doctest::Approx(-s));
}

TEST_CASE("reading-mode combination of sidebands") {
  const double z = 2.5;
  const double mu = 0.5 * (z + 1.0 / z);
  const double nu = 0.5 * (z - 1.0 / z);
  const ModeId us{"us", ModeKind::LightSidebandUpper};
  const ModeId ls{"ls", ModeKind::LightSidebandLower};
  const auto m = reading_mode_combination(z, us, ls, {"R", ModeKind::ReadingMode}, {"Rc", ModeKind::ReadingMode}).matrix();
  CHECK(m(0, 0) == doctest::Approx(mu));
  CHECK(m(0, 3) == doctest::Approx(nu));
  CHECK(m(1, 2) == doctest::Approx(nu));
  // Vacuum sidebands give a reading mode with excess ½(μ² + ν²).
  const auto s = apply_map(vacuum({us, ls}),
                           reading_mode_combination(z, us, ls, {"R", ModeKind::ReadingMode}, {"Rc", ModeKind::ReadingMode}));
  CHECK(s.variance("R", Quadrature::X) == doctest::Approx(0.5 * (mu * mu + nu * nu)));
}

TEST_CASE("interaction parameter validation") {
  CHECK_THROWS_AS(InteractionParams({0.0, 1.0, 1.0, 0.0}).validate(), Error);
  CHECK_THROWS_AS(InteractionParams({1.0, -1.0, 1.0, 0.0}).validate(), Error);
  CHECK_THROWS_AS(InteractionParams({1.0, 1.0, 0.0, 0.0}).validate(), Error);
  CHECK(InteractionParams({1.0, 1.0, 1e-3, 2.0 * 3.14159 * 3.22e5}).larmor_regime_ok());
  CHECK_FALSE(InteractionParams({1.0, 1.0, 1e-5, 2.0 * 3.14159 * 3.22e5}).larmor_regime_ok());
}

TEST_CASE("mode functions are normalized") {
  const double tt = 2.0;
  const auto norm = [&](const ModeFunctionSpec& spec) {
    // composite Simpson, 20000 intervals
    const int n = 20000;
    const double h = tt / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double f = mode_function(spec, i * h);
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      sum += w * f * f;
    }
    return sum * h / 3.0 / tt;
  };
  CHECK(norm({EnvelopeKind::Flat, 0.0, tt, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(norm({EnvelopeKind::ExpRising, 0.8, tt, 0.0}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(norm({EnvelopeKind::ExpFalling, 0.8, tt, 0.0}) == doctest::Approx(1.0).epsilon(1e-9));
  const double omega = 2.0 * 3.14159265358979 * 50.25;
  CHECK(std::abs(norm({EnvelopeKind::CosModulated, 0.0, tt, omega}) - 1.0) < 2.0 / (omega * tt));
  CHECK(std::abs(norm({EnvelopeKind::SinModulated, 0.0, tt, omega}) - 1.0) < 2.0 / (omega * tt));
}

TEST_CASE("reading mode norms") {
  const double kappa = 1.2, z = 2.5;
  const double x = kappa * kappa / (z * z);
  CHECK(reading_mode_norm(EnvelopeKind::ExpRising, kappa, z) == doctest::Approx(std::sqrt(std::exp(x) - 1.0)));
  CHECK(reading_mode_norm(EnvelopeKind::ExpFalling, kappa, z) == doctest::Approx(std::sqrt(1.0 - std::exp(-x))));
}
