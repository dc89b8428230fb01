#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qlmi/dissipative.hpp"
#include "qlmi/error.hpp"
#include "support.hpp"

#include <cmath>

using namespace qlmi;
using namespace qlmi::dissipative;
using support::max_abs;

namespace {

double mu_of(double z) { return 0.5 * (z + 1.0 / z); }
double nu_of(double z) { return 0.5 * (z - 1.0 / z); }

// vec(AΣ + ΣAᵀ) = (I⊗A + A⊗I) vec Σ
Matrix kronecker_lyapunov(const Matrix& a, const Matrix& d) {
  const Eigen::Index n = a.rows();
  Matrix big = Matrix::Zero(n * n, n * n);
  const Matrix id = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      big.block(i * n, j * n, n, n) += a(i, j) * id;
      big.block(i * n, j * n, n, n) += id(i, j) * a;
    }
  const Vector rhs = -Eigen::Map<const Vector>(d.data(), n * n);
  const Vector x = big.fullPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(x.data(), n, n);
}

// Classic RK4 on the moment equations.
std::pair<Vector, Matrix> rk4(const LindbladModel& m, Vector mean, Matrix cov, double t, int steps) {
  const double h = t / steps;
  const auto fs = [&](const Matrix& s) -> Matrix { return m.drift * s + s * m.drift.transpose() + m.diffusion; };
  for (int k = 0; k < steps; ++k) {
    const Vector a1 = m.drift * mean;
    const Vector a2 = m.drift * (mean + 0.5 * h * a1);
    const Vector a3 = m.drift * (mean + 0.5 * h * a2);
    const Vector a4 = m.drift * (mean + h * a3);
    mean += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
    const Matrix k1 = fs(cov);
    const Matrix k2 = fs(cov + 0.5 * h * k1);
    const Matrix k3 = fs(cov + 0.5 * h * k2);
    const Matrix k4 = fs(cov + h * k3);
    cov += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return {mean, cov};
}

CVector lowering() {
  CVector c(2);
  c << 1.0 / std::sqrt(2.0), std::complex<double>(0.0, 1.0 / std::sqrt(2.0));
  return c;
}

}  // namespace

TEST_CASE("single-mode damping and amplification coefficients") {
  const std::vector<ModeId> one = support::atoms({"A"});
  const auto damp = make_model(one, {lowering()}, {0.6});
  CHECK(max_abs(damp.drift + 0.3 * Matrix::Identity(2, 2)) < 1e-14);
  CHECK(max_abs(damp.diffusion - 0.3 * Matrix::Identity(2, 2)) < 1e-14);
  const auto amp = make_model(one, {lowering().conjugate()}, {0.6});
  CHECK(max_abs(amp.drift - 0.3 * Matrix::Identity(2, 2)) < 1e-14);
  CHECK(max_abs(amp.diffusion - 0.3 * Matrix::Identity(2, 2)) < 1e-14);
  // Damping relaxes to vacuum.
  const auto s = steady_state(damp);
  CHECK(max_abs(s.cov() - 0.5 * Matrix::Identity(2, 2)) < 1e-12);
  CHECK_FALSE(is_unique(amp).unique);
  CHECK_THROWS_AS(make_model(one, {lowering()}, {-1.0}), Error);
}

TEST_CASE("jump operators") {
  const auto j = jump_operators(mu_of(2.5), nu_of(2.5));
  CHECK(j.a.size() == 4);
  CHECK_THROWS_AS(jump_operators(1.0, 1.0), Error);
  CHECK_NOTHROW(jump_operators_unchecked(1.0, 1.0));
  CHECK(build_ideal_model(mu_of(2.5), nu_of(2.5), 30.0, 1.0).rebuild_defect() < 1e-13);
}

TEST_CASE("Lyapunov solver agrees with the Kronecker solve") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + 2 * (trial % 3);
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        a(i, k) = support::gauss(rng);
    // shift into the Hurwitz region
    const double shift = a.eigenvalues().real().maxCoeff() + support::uniform(rng, 0.1, 2.0);
    a -= shift * Matrix::Identity(n, n);
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        g(i, k) = support::gauss(rng);
    const Matrix d = g * g.transpose();
    const Matrix x = solve_lyapunov(a, d);
    const Matrix oracle = kronecker_lyapunov(a, d);
    CHECK(max_abs(x - oracle) < 1e-9 * std::max(1.0, max_abs(oracle)));
    CHECK(max_abs(a * x + x * a.transpose() + d) < 1e-10 * std::max(1.0, max_abs(d)));
  }
  Matrix unstable = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(solve_lyapunov(unstable, Matrix::Identity(2, 2)), Error);
}

TEST_CASE("ideal steady state reaches 1/Z^2") {
  for (double z : {1.05, 1.5, 2.5, 4.0, 10.0, 40.0})
    for (double d : {1.0, 30.0, 150.0}) {
      const auto model = build_ideal_model(mu_of(z), nu_of(z), d, 1.0);
      const auto spec = is_unique(model);
      CHECK(spec.unique);
      CHECK(spec.max_real_part == doctest::Approx(-0.5 * d));
      const auto s = steady_state(model);
      CHECK(epr_variance(s, "A_I", "A_II") == doctest::Approx(1.0 / (z * z)).epsilon(1e-10));
      CHECK(check_physical(s).physical);
      // The two-mode squeezed vacuum is pure: both jump operators annihilate it.
      const auto j = jump_operators(mu_of(z), nu_of(z));
      CHECK(jump_occupation(s, model.modes, j.a) < 1e-10);
      CHECK(jump_occupation(s, model.modes, j.b) < 1e-10);
    }
  const auto rep = entanglement_report(steady_state(build_ideal_model(mu_of(2.5), nu_of(2.5), 30.0, 1.0)), "A_I", "A_II");
  CHECK(rep.entangled);
  CHECK(rep.epr_variance == doctest::Approx(0.16));
}

TEST_CASE("uniqueness fails without dissipation or at balance") {
  CHECK_FALSE(is_unique(build_ideal_model(mu_of(2.5), nu_of(2.5), 0.0, 1.0)).unique);
  const auto j = jump_operators_unchecked(1.0, 1.0);
  const auto balanced = make_model({{"A_I", ModeKind::Atomic}, {"A_II", ModeKind::Atomic}}, {j.a, j.b}, {30.0, 30.0});
  const auto report = is_unique(balanced);
  CHECK_FALSE(report.unique);
  CHECK(std::abs(report.max_real_part) < 1e-12);
  CHECK_THROWS_AS(steady_state(balanced), Error);
}

TEST_CASE("evolution matches RK4 and forms a semigroup") {
  std::mt19937_64 rng(5);
  const auto base = build_ideal_model(mu_of(2.5), nu_of(2.5), 3.0, 1.0);
  const auto model = add_noise_channel(add_noise_channel(base, NoiseKind::Pump, 0.3), NoiseKind::Dephasing, 0.05);
  const auto start = support::random_state(model.modes, rng);
  for (double t : {0.1, 0.5, 2.0}) {
    const auto out = evolve(model, start, t);
    const auto [mean, cov] = rk4(model, start.mean(), start.cov(), t, 4000);
    CHECK(max_abs(out.cov() - cov) < 1e-9);
    CHECK((out.mean() - mean).cwiseAbs().maxCoeff() < 1e-9);
  }
  const auto two = evolve(model, evolve(model, start, 0.4), 0.9);
  const auto once = evolve(model, start, 1.3);
  CHECK(max_abs(two.cov() - once.cov()) < 1e-11);
  CHECK(max_abs(evolve(model, start, 0.0).cov() - start.cov()) < 1e-14);
  // The drift is −dΓ/2 exactly for the ideal pair.
  const auto mean_only = evolve(base, start, 0.7);
  CHECK((mean_only.mean() - std::exp(-1.5 * 0.7) * start.mean()).cwiseAbs().maxCoeff() < 1e-12);
  // Long times approach the steady state.
  CHECK(max_abs(evolve(model, start, 40.0).cov() - steady_state(model).cov()) < 1e-10);
}

TEST_CASE("evolve leaves other modes untouched") {
  std::mt19937_64 rng(8);
  const auto model = build_ideal_model(mu_of(2.0), nu_of(2.0), 1.0, 1.0);
  const auto s = support::random_state({{"A_I", ModeKind::Atomic}, {"L", ModeKind::LightCos}, {"A_II", ModeKind::Atomic}}, rng);
  const auto out = evolve(model, s, 0.5);
  CHECK(out.variance("L", Quadrature::X) == doctest::Approx(s.variance("L", Quadrature::X)));
  CHECK(out.mean_of("L", Quadrature::P) == doctest::Approx(s.mean_of("L", Quadrature::P)));
}

TEST_CASE("local noise degrades the steady-state correlations") {
  const auto base = build_ideal_model(mu_of(2.5), nu_of(2.5), 30.0, 1.0);
  for (auto kind : {NoiseKind::SingleAtomDecay, NoiseKind::Pump, NoiseKind::Repump, NoiseKind::Dephasing}) {
    double last = 0.16 - 1e-12;
    for (double rate : {0.5, 2.0, 8.0, 32.0}) {
      const auto s = steady_state(add_noise_channel(base, kind, rate));
      const double v = epr_variance(s, "A_I", "A_II");
      CHECK(v > last);
      last = v;
      CHECK(check_physical(s).physical);
    }
  }
  CHECK(max_abs(add_noise_channel(base, NoiseKind::Pump, 0.0).diffusion - base.diffusion) == 0.0);
  CHECK_THROWS_AS(add_noise_channel(base, NoiseKind::Pump, -0.1), Error);
  CHECK(noise_kind_from_string("repump") == NoiseKind::Repump);
  CHECK_THROWS_AS(noise_kind_from_string("bogus"), Error);
}
