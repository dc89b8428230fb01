// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "qlmi/dissipative.hpp"
#include "qlmi/fock.hpp"
#include "qlmi/level_structure.hpp"
#include "qlmi/light_matter.hpp"
#include "qlmi/protocols.hpp"
#include "support.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace qlmi;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double mu_of(double z) { return 0.5 * (z + 1.0 / z); }
double nu_of(double z) { return 0.5 * (z - 1.0 / z); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const char* name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  failures += o.pass ? 0 : 1;
  std::printf("%-4s %2d %-24s %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome z_parameter() {
  const auto t0 = Clock::now();
  const auto res = levels::z_from_scheme(levels::cesium_d2_tables(850e6, levels::DrivePolarization::Y));
  const double dt = seconds_since(t0);
  return {res.z >= 2.4 && res.z <= 2.6 && dt < 1.0, fmt("Z=%.6f r=%.6f t=%.3fs", res.z, res.r, dt)};
}

Outcome steady_state() {
  const auto t0 = Clock::now();
  const double z = 2.5;
  const auto model = dissipative::build_ideal_model(mu_of(z), nu_of(z), 30.0, 1.0);
  const double lyap = epr_variance(dissipative::steady_state(model), "A_I", "A_II");
  const double closed = 1.0 / (z * z);
  const auto dark = fock::dark_state(model, 30);
  const auto m = fock::moments(dark.state);
  const double f = epr_variance(GaussianState(model.modes, m.mean, m.cov), "A_I", "A_II");
  const double dt = seconds_since(t0);
  const double rel = std::abs(lyap - closed) / closed;
  const double fock_rel = std::abs(f - lyap) / lyap;
  return {rel < 1e-6 && fock_rel < 1e-3 && dt < 30.0,
          fmt("lyapunov=%.10f closed=%.4f fock=%.10f (rel %.1e) t=%.2fs", lyap, closed, f, fock_rel, dt)};
}

Outcome uniqueness() {
  bool ok = true;
  for (double z : {1.1, 2.5, 10.0})
    ok = ok && dissipative::is_unique(dissipative::build_ideal_model(mu_of(z), nu_of(z), 30.0, 1.0)).unique;
  const auto j = dissipative::jump_operators_unchecked(1.0, 1.0);
  const auto balanced =
      dissipative::make_model({{"A_I", ModeKind::Atomic}, {"A_II", ModeKind::Atomic}}, {j.a, j.b}, {30.0, 30.0});
  const bool surrogate = dissipative::is_unique(balanced).unique;
  const bool no_depth = dissipative::is_unique(dissipative::build_ideal_model(mu_of(2.5), nu_of(2.5), 0.0, 1.0)).unique;
  return {ok && !surrogate && !no_depth,
          fmt("unique for Z in {1.1,2.5,10}: %s; mu=nu: %s; d*Gamma=0: %s", ok ? "yes" : "no",
              surrogate ? "unique" : "not unique", no_depth ? "unique" : "not unique")};
}

Outcome memory() {
  std::mt19937_64 rng(2024);
  const double z = 2.5;
  const auto cfg = protocols::MemoryConfig::with_kappa(z, 1.0, 1.0);
  const auto map = maps::nonqnd_two_cell(cfg.interaction);
  const std::vector<ModeId> modes = {map.input_modes()[0], map.input_modes()[2], map.input_modes()[1],
                                     map.input_modes()[3]};
  const double c = std::sqrt(1.0 - 1.0 / (z * z));
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto joint = support::random_state(modes, rng);
    const auto out = protocols::memory_store_joint(cfg, joint);
    Matrix t = Matrix::Zero(4, 8);
    const char* sectors[2][2] = {{"A_cos", "R+_cos"}, {"A_sin", "R+_sin"}};
    for (int k = 0; k < 2; ++k) {
      t(2 * k, joint.row_of(sectors[k][0], Quadrature::X)) = c;
      t(2 * k, joint.row_of(sectors[k][1], Quadrature::P)) = 1.0;
      t(2 * k + 1, joint.row_of(sectors[k][1], Quadrature::X)) = -1.0;
    }
    const Matrix cov = t * joint.cov() * t.transpose();
    const auto keep = reduce(out, {"A_cos", "A_sin"});
    worst = std::max(worst, support::max_abs(keep.cov() - cov));
  }
  // Vacuum in: ½(1 − 1/Z²) + ½ = 0.5·0.84 + 0.5.
  const double oracle = 0.5 * (1.0 - 1.0 / (z * z)) + 0.5;
  const auto vac = protocols::memory_store(cfg, vacuum({{"in", ModeKind::LightCos}}));
  const double vx = vac.variance("A_cos", Quadrature::X);
  const double vp = vac.variance("A_cos", Quadrature::P);
  return {worst < 1e-10 && std::abs(vx - oracle) < 1e-10 && std::abs(vp - 0.5) < 1e-10,
          fmt("max|dcov|=%.1e over 20 inputs; var x_fin=%.12f (oracle (1-1/Z^2)/2+1/2=%.2f) "
              "var P_fin=%.12f",
              worst, vx, oracle, vp)};
}

Outcome qnd_limit() {
  const double z = 1e3, kappa = 1.0;
  const double t = maps::swap_time_for_kappa(z, kappa);
  const double gap =
      support::max_abs(maps::nonqnd_two_cell({z, 1.0, t, 0.0}).matrix() - maps::qnd_two_cell(kappa).matrix());
  return {gap < 1e-3, fmt("max gap=%.3e at Z=1e3, kappa=1", gap)};
}

Outcome symplectic_suite() {
  std::mt19937_64 rng(61);
  const ModeId a{"A", ModeKind::Atomic}, l{"L", ModeKind::LightCos}, r{"R", ModeKind::ReadingMode};
  const ModeId us{"us", ModeKind::LightSidebandUpper}, ls{"ls", ModeKind::LightSidebandLower};
  const ModeId rc{"Rc", ModeKind::ReadingMode};
  double worst = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const double z = std::exp(support::uniform(rng, std::log(0.05), std::log(1e3)));
    const double kappa = support::uniform(rng, 0.0, 5.0);
    const maps::InteractionParams p{z, support::uniform(rng, 0.1, 10.0), support::uniform(rng, 0.0, 10.0),
                                    2.0 * 3.14159265358979 * 3.22e5};
    // sideband entries grow like mu^2; that map is drawn over Z <= 30
    const double z_side = std::exp(support::uniform(rng, std::log(0.05), std::log(30.0)));
    for (const auto& m : {maps::qnd_single_pass(kappa, a, l), maps::qnd_two_cell(kappa), maps::nonqnd_two_cell(p),
                          maps::long_time_limit(z), maps::reading_mode_combination(z, us, ls, r, rc),
                          maps::nonqnd_single_cell({z_side, p.gamma_s, p.duration, p.omega}),
                          maps::nonqnd_single_cell_reading(p, a, r)})
      worst = std::max(worst, m.symplectic_defect());
  }
  return {worst < 1e-10, fmt("worst |S Omega S^T - Omega|=%.2e over 1000 draws x 7 maps (Z in [0.05,1e3]; single-cell sidebands Z <= 30)", worst)};
}

Outcome metrology() {
  const auto opt = protocols::optimize_eta(100.0, 0.0);
  const double eta = 98.0 / 300.0;
  const double xi = protocols::spin_squeezing_xi({100.0, eta, 0.0, 1e6});
  const auto far = protocols::optimize_eta(1e8, 0.0);
  std::vector<double> ns;
  for (double n = 1e3; n <= 1e7 * 1.0001; n *= std::sqrt(10.0))
    ns.push_back(n);
  const auto scan = protocols::heisenberg_scan([](double n) { return 0.1 * n; }, ns);
  const bool ok = std::abs(opt.eta_star - eta) < 1e-6 && std::abs(opt.xi_min - xi) < 1e-9 &&
                  std::abs(far.eta_star - 1.0 / 3.0) < 1e-6 && std::abs(scan.precision_slope + 1.0) < 0.02;
  return {ok, fmt("eta*=%.8f xi_min=%.10f; eta*(d=1e8)=%.8f; precision slope=%.4f; xi slope=%.4f vs -0.5 for "
                  "xi ~ 1/sqrt(N) (discrepancy %.4f)",
                  opt.eta_star, opt.xi_min, far.eta_star, scan.precision_slope, scan.xi_slope,
                  scan.xi_slope_discrepancy)};
}

Outcome hybrid() {
  double worst = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double n_bar = 2.0 * i, kappa = 0.1 + 0.3 * j;
      const double formula = 1.0 / (1.0 / (1.0 + n_bar) + 2.0 * kappa * kappa);
      worst = std::max(worst, std::abs(protocols::hybrid_epr_protocol(n_bar, kappa).per_sector - formula));
    }
  const auto hot = protocols::hybrid_epr_protocol(10.0, 1.0);
  return {worst < 1e-9 && hot.entangled && std::abs(hot.per_sector - 1.0 / (1.0 / 11.0 + 2.0)) < 1e-9,
          fmt("max |pipeline - formula|=%.1e on 10x10; n_bar=10, kappa=1: %.6f", worst, hot.per_sector)};
}

Outcome magnetometry() {
  protocols::MagnetometryConfig cfg;
  cfg.b_rf = 1e-15;
  const double s = protocols::magnetometry_run(cfg).sensitivity;
  const double short_ratio = protocols::entanglement_assisted_snr(cfg, 1.0, {1e-4})[0].ratio;
  const double clean = protocols::entanglement_assisted_snr(cfg, 1.0, {1e-3}, 0.0)[0].ratio;
  const double noisy = protocols::entanglement_assisted_snr(cfg, 1.0, {1e-3}, 1e4)[0].ratio;
  const bool ok = s > 4.2e-16 / 3.0 && s < 4.2e-16 * 3.0 && short_ratio > 1.0 && noisy < clean &&
                  noisy >= 1.0 - 1e-12 && noisy < 1.0 + 1e-3;
  return {ok, fmt("sensitivity=%.3e T/sqrt(Hz) (target 4.2e-16); SNR ratio short tau=%.4f, with decoherence "
                  "%.6f",
                  s, short_ratio, noisy)};
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  struct Point {
    double z, d, t, noise;
  };
  const Point points[] = {{1.2, 1.0, 0.5, 0.0}, {1.5, 2.0, 0.3, 0.0}, {1.7, 1.0, 1.0, 0.0},
                          {1.5, 1.0, 0.6, 0.2}, {1.3, 3.0, 0.2, 0.1}};
  double worst = 0.0, worst_ratio = 0.0;
  for (const auto& p : points) {
    worst_ratio = std::max(worst_ratio, nu_of(p.z) / mu_of(p.z));
    auto model = dissipative::build_ideal_model(mu_of(p.z), nu_of(p.z), p.d, 1.0);
    model = dissipative::add_noise_channel(model, dissipative::NoiseKind::SingleAtomDecay, p.noise);
    const auto start = displace(vacuum(model.modes), "A_I", 0.4, -0.2);
    const auto g = dissipative::evolve(model, start, p.t);
    const auto m = fock::moments(fock::evolve_lindblad(fock::from_gaussian(start, 30), model, p.t));
    worst = std::max({worst, support::max_abs(m.cov - g.cov()), (m.mean - g.mean()).cwiseAbs().maxCoeff()});
  }
  const double dt = seconds_since(t0);
  return {worst < 1e-4 && worst_ratio <= 0.5 && dt < 300.0,
          fmt("max moment gap=%.2e over 5 points (nu/mu <= %.3f, cutoff 30) t=%.1fs", worst, worst_ratio, dt)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "qlmi_acceptance";
  fs::remove_all(root);
  const std::string scenario = (fs::path(QLMI_SCENARIOS) / "memory_kappa1.yaml").string();
  std::string files[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root / ("run" + std::to_string(i));
    const std::string cmd =
        std::string("\"") + QLMI_CLI + "\" run " + scenario + " --seed 7 --out " + out.string() + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    if (!WIFEXITED(rc) || WEXITSTATUS(rc) != 0)
      return {false, "cli run failed"};
    files[i] = slurp(out / "memory_kappa1.csv");
  }
  return {!files[0].empty() && files[0] == files[1], fmt("two runs with seed 7: %zu bytes each, identical=%s",
                                                         files[0].size(), files[0] == files[1] ? "yes" : "no")};
}

}  // namespace

int main() {
  report(1, "z-parameter", z_parameter);
  report(2, "dissipative steady state", steady_state);
  report(3, "uniqueness dichotomy", uniqueness);
  report(4, "memory map identity", memory);
  report(5, "qnd limit", qnd_limit);
  report(6, "symplectic suite", symplectic_suite);
  report(7, "metrology optimum", metrology);
  report(8, "hybrid formula", hybrid);
  report(9, "magnetometry", magnetometry);
  report(10, "oracle equivalence", oracle_equivalence);
  report(11, "determinism", determinism);
  return failures == 0 ? 0 : 1;
}
