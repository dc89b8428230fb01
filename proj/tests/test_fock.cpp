#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qlmi/dissipative.hpp"
#include "qlmi/error.hpp"
#include "qlmi/fock.hpp"
#include "support.hpp"

#include <cmath>

using namespace qlmi;
using namespace qlmi::fock;
using support::max_abs;

namespace {

double mu_of(double z) { return 0.5 * (z + 1.0 / z); }
double nu_of(double z) { return 0.5 * (z - 1.0 / z); }

double occupation(const FockState& s, Eigen::Index n) { return s.rho(n, n).real(); }

}  // namespace

TEST_CASE("coherent state has Poisson statistics") {
  const Complex alpha(1.1, -0.7);
  const auto v = coherent_state({30}, {alpha});
  const auto rho = to_density(v);
  const double n2 = std::norm(alpha);
  for (int n = 0; n < 12; ++n) {
    const double poisson = std::exp(-n2) * std::pow(n2, n) / std::tgamma(n + 1.0);
    CHECK(occupation(rho, n) == doctest::Approx(poisson).epsilon(1e-10));
  }
  const auto m = moments(v);
  CHECK(m.mean(0) == doctest::Approx(std::sqrt(2.0) * alpha.real()).epsilon(1e-10));
  CHECK(m.mean(1) == doctest::Approx(std::sqrt(2.0) * alpha.imag()).epsilon(1e-10));
  CHECK(max_abs(m.cov - 0.5 * Matrix::Identity(2, 2)) < 1e-10);
}

TEST_CASE("ladder operators") {
  const auto a = annihilation({4, 3}, 0);
  const auto b = annihilation({4, 3}, 1);
  CHECK(a.rows() == 20);
  // a|2,1⟩ = √2|1,1⟩, b|2,1⟩ = |2,0⟩; first mode most significant.
  CVector in = CVector::Zero(20);
  in(2 * 4 + 1) = 1.0;
  const CVector out_a = a * in;
  const CVector out_b = b * in;
  CHECK(std::abs(out_a(1 * 4 + 1) - std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(out_b(2 * 4 + 0) - 1.0) < 1e-15);
  CHECK(out_a.norm() == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("number states") {
  const auto s = basis_state({10}, {3});
  const auto m = moments(s);
  CHECK(m.cov(0, 0) == doctest::Approx(3.5));
  CHECK(m.cov(1, 1) == doctest::Approx(3.5));
  CHECK(std::abs(m.cov(0, 1)) < 1e-14);
  CHECK_THROWS_AS(basis_state({10}, {11}), Error);
}

TEST_CASE("Gaussian states round trip through the Fock basis") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = support::random_state(support::atoms({"a", "b"}), rng, 0.3, 0.5, 0.2);
    const auto f = from_gaussian(g, 30);
    CHECK(f.leaked < 1e-8);
    CHECK_FALSE(f.leak_warning);
    CHECK(trace(f) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hermiticity_defect(f) < 1e-12);
    CHECK(min_eigenvalue(f) > -1e-10);
    const auto m = moments(f);
    CHECK((m.mean - g.mean()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(max_abs(m.cov - g.cov()) < 1e-6);
  }
  // Thermal occupation 0.5 gives geometric populations.
  const auto th = from_gaussian(thermal(support::atoms({"t"}), 0.5), 30);
  for (int n = 0; n < 6; ++n)
    CHECK(occupation(th, n) == doctest::Approx(std::pow(0.5, n) / std::pow(1.5, n + 1)).epsilon(1e-9));
  const auto hot = from_gaussian(thermal(support::atoms({"t"}), 20.0), 10);
  CHECK(hot.leak_warning);
}

TEST_CASE("damping of a number state") {
  const auto a = annihilation({8}, 0);
  const auto out = evolve_lindblad(basis_state({8}, {3}), {a}, {0.7}, 1.2);
  // ⟨n⟩ = 3 e^{−γt}; P(0) = (1 − e^{−γt})³
  const double e = std::exp(-0.7 * 1.2);
  double n = 0.0;
  for (int k = 0; k <= 8; ++k)
    n += k * occupation(out, k);
  CHECK(n == doctest::Approx(3.0 * e).epsilon(1e-7));
  CHECK(occupation(out, 0) == doctest::Approx(std::pow(1.0 - e, 3)).epsilon(1e-7));
  CHECK(trace(out) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("dark state of the ideal pair") {
  const double z = 2.5;
  const auto model = dissipative::build_ideal_model(mu_of(z), nu_of(z), 30.0, 1.0);
  const auto dark = dark_state(model, 30);
  CHECK(dark.residual < 1e-8);
  CHECK(dark.gap > 1.0);
  const auto m = moments(dark.state);
  const GaussianState g(model.modes, m.mean, m.cov);
  const double v = epr_variance(g, "A_I", "A_II");
  CHECK(std::abs(v - 0.16) / 0.16 < 1e-3);
  CHECK(max_abs(m.cov - dissipative::steady_state(model).cov()) < 1e-5);
  // Local noise leaves no common dark state.
  CHECK(dark_state(dissipative::add_noise_channel(model, dissipative::NoiseKind::Dephasing, 0.1), 10).residual > 1e-3);
}

TEST_CASE("Lindblad evolution agrees with the Gaussian moments") {
  // ν/μ ≤ 0.5 keeps the steady-state occupation at 1/3; cutoff 20 here, the
  // acceptance run repeats this at 30.
  struct Point {
    double z, d, t;
    double noise;
  };
  const Point points[] = {{1.2, 1.0, 0.5, 0.0}, {1.5, 2.0, 0.3, 0.0}, {1.7, 1.0, 1.0, 0.0},
                          {1.5, 1.0, 0.6, 0.2}, {1.3, 3.0, 0.2, 0.1}};
  for (const auto& p : points) {
    auto model = dissipative::build_ideal_model(mu_of(p.z), nu_of(p.z), p.d, 1.0);
    model = dissipative::add_noise_channel(model, dissipative::NoiseKind::SingleAtomDecay, p.noise);
    const auto start = displace(vacuum(model.modes), "A_I", 0.4, -0.2);
    const auto gauss = dissipative::evolve(model, start, p.t);
    const auto f = evolve_lindblad(from_gaussian(start, 20), model, p.t);
    const auto m = moments(f);
    CHECK(max_abs(m.cov - gauss.cov()) < 1e-4);
    CHECK((m.mean - gauss.mean()).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(f.leaked < 1e-3);
  }
}

TEST_CASE("symplectic action in the Fock basis") {
  const auto modes = support::atoms({"a", "b"});
  const auto bs = beamsplitter(modes[0], modes[1], 0.4);
  const auto sq = two_mode_squeeze(modes[0], modes[1], 0.2);
  const Matrix s = compose(bs, sq).matrix();
  const auto v = coherent_state({30, 30}, {Complex(0.5, 0.2), Complex(-0.3, 0.1)});
  const auto out = apply_symplectic(v, s);
  const auto m = moments(out);
  const auto g = apply_map(GaussianState(modes, moments(v).mean, 0.5 * Matrix::Identity(4, 4)), compose(bs, sq));
  CHECK(max_abs(m.cov - g.cov()) < 1e-6);
  CHECK((m.mean - g.mean()).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(max_abs(generator(Matrix::Identity(4, 4))) < 1e-12);
}
