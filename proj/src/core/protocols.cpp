#include "qlmi/protocols.hpp"

#include "qlmi/constants.hpp"
#include "qlmi/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qlmi::protocols {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void require_positive(double v, const char* what) {
  require(std::isfinite(v) && v > 0.0, ErrorCode::InvalidArgument, std::string(what) + " must be positive");
}

void require_non_negative(double v, const char* what) {
  require(std::isfinite(v) && v >= 0.0, ErrorCode::InvalidArgument,
          std::string(what) + " must be non-negative");
}

// Conditions on x of each light mode and returns var(p_cos) + var(p_sin).
double conditioned_sector_variance(GaussianState state, const maps::TwoCellModes& modes) {
  state = homodyne_condition(state, modes.light_cos.label, Quadrature::X, 0.0).state;
  state = homodyne_condition(state, modes.light_sin.label, Quadrature::X, 0.0).state;
  return state.variance(modes.atom_cos.label, Quadrature::P) + state.variance(modes.atom_sin.label, Quadrature::P);
}

// QND pre-probe that conditions x of `atom` (rotate, measure p, rotate back).
GaussianState presqueeze_x(const GaussianState& state, const ModeId& atom, double kappa) {
  if (kappa == 0.0)
    return state;
  const ModeId probe{"presqueeze_probe", ModeKind::LightCos};
  auto s = tensor(state, vacuum({probe}));
  s = apply_map(s, phase_rotation(atom, -0.5 * constants::kPi));
  s = apply_map(s, maps::qnd_single_pass(kappa, atom, probe));
  s = homodyne_condition(s, probe.label, Quadrature::X, s.mean_of(probe.label, Quadrature::X)).state;
  return apply_map(s, phase_rotation(atom, 0.5 * constants::kPi));
}

}  // namespace

// ---------------------------------------------------------------------------

SymplecticMap ensemble_epr_basis(const ModeId& first, const ModeId& second, const ModeId& cos,
                                 const ModeId& sin) {
  Matrix m(4, 4);
  m << 1, 0, 1, 0,
       0, 1, 0, 1,
       0, -1, 0, 1,
       1, 0, -1, 0;
  return SymplecticMap(kInvSqrt2 * m, Vector::Zero(4), {first, second}, {cos, sin});
}

SymplecticMap hybrid_epr_basis(const ModeId& atom, const ModeId& mechanics, const ModeId& cos,
                               const ModeId& sin) {
  Matrix m(4, 4);
  m << 1, 0, 0, 1,
       0, 1, -1, 0,
       1, 0, 0, -1,
       0, 1, 1, 0;
  return SymplecticMap(kInvSqrt2 * m, Vector::Zero(4), {atom, mechanics}, {cos, sin});
}

// ---------------------------------------------------------------------------
// Memory

void MemoryConfig::validate() const {
  interaction.validate();
  require(interaction.kappa() > 0.0, ErrorCode::InvalidArgument, "memory: κ must be positive");
  require_non_negative(gain, "memory gain");
  require_non_negative(presqueeze_kappa, "presqueeze_kappa");
  require_non_negative(displacement_max, "displacement_max");
  require(grid_points >= 1, ErrorCode::InvalidArgument, "memory: grid_points must be at least 1");
  require_non_negative(squeezing_db, "squeezing_db");
  require(!squeezing_phases.empty(), ErrorCode::InvalidArgument, "memory: need at least one squeezing phase");
  if (classical_benchmark)
    require(*classical_benchmark >= 0.0 && *classical_benchmark <= 1.0, ErrorCode::InvalidArgument,
            "memory: classical_benchmark must lie in [0, 1]");
}

MemoryConfig MemoryConfig::with_kappa(double z, double kappa, double gain) {
  MemoryConfig c;
  c.interaction = {z, maps::swap_time_for_kappa(z, kappa), 1.0, 0.0};
  c.gain = gain;
  c.validate();
  return c;
}

GaussianState memory_store_joint(const MemoryConfig& config, const GaussianState& joint) {
  config.validate();
  const maps::ReadingModes modes;
  auto state = apply_map(joint, maps::nonqnd_two_cell(config.interaction, modes));
  const double e = std::exp(-config.interaction.swap_time());
  const double feedback_gain = -config.gain * e / config.interaction.kappa();
  const std::pair<const ModeId*, const ModeId*> sectors[2] = {{&modes.falling_cos, &modes.atom_cos},
                                                              {&modes.falling_sin, &modes.atom_sin}};
  for (const auto& [light, atom] : sectors) {
    const Feedback fb[1] = {{atom->label, Quadrature::P, feedback_gain}};
    state = homodyne_feedback(state, light->label, Quadrature::X, fb);
  }
  return reduce(state, {modes.atom_cos.label, modes.atom_sin.label});
}

GaussianState memory_initial_atoms(const MemoryConfig& config) {
  const maps::ReadingModes modes;
  auto atoms = vacuum({modes.atom_cos, modes.atom_sin});
  atoms = presqueeze_x(atoms, modes.atom_cos, config.presqueeze_kappa);
  return presqueeze_x(atoms, modes.atom_sin, config.presqueeze_kappa);
}

GaussianState memory_store(const MemoryConfig& config, const GaussianState& input_light) {
  require(input_light.num_modes() == 1 || input_light.num_modes() == 2, ErrorCode::ModeMismatch,
          "memory: input light must have one or two modes");
  const maps::ReadingModes modes;
  GaussianState light = relabel(input_light, input_light.modes()[0].label, modes.rising_cos);
  if (input_light.num_modes() == 2)
    light = relabel(light, input_light.modes()[1].label, modes.rising_sin);
  else
    light = tensor(light, vacuum({modes.rising_sin}));

  const auto out = memory_store_joint(config, tensor(memory_initial_atoms(config), light));
  if (input_light.num_modes() == 1)
    return reduce(out, {modes.atom_cos.label});
  return out;
}

GaussianState memory_target(const GaussianState& input_light) {
  const maps::ReadingModes modes;
  const ModeId targets[2] = {modes.atom_cos, modes.atom_sin};
  require(input_light.num_modes() <= 2, ErrorCode::ModeMismatch, "memory: at most two input modes");
  GaussianState s = input_light;
  for (std::size_t k = 0; k < input_light.num_modes(); ++k) {
    const ModeId& m = input_light.modes()[k];
    s = apply_map(s, phase_rotation(m, 0.5 * constants::kPi));
    s = relabel(s, m.label, targets[k]);
  }
  return s;
}

GaussianState make_input_state(const InputStateSpec& spec, const ModeId& mode) {
  require_non_negative(spec.squeezing_db, "squeezing_db");
  auto s = vacuum({mode});
  if (spec.squeezing_db > 0.0) {
    s = apply_map(s, single_mode_squeeze(mode, spec.squeezing_db * std::log(10.0) / 20.0));
    s = apply_map(s, phase_rotation(mode, spec.squeezing_phase));
  }
  return displace(s, mode.label, spec.x, spec.p);
}

std::vector<InputStateSpec> memory_input_set(const MemoryConfig& config) {
  config.validate();
  std::vector<double> axis;
  for (int i = 0; i < config.grid_points; ++i)
    axis.push_back(config.grid_points == 1
                       ? 0.0
                       : -config.displacement_max + 2.0 * config.displacement_max * i / (config.grid_points - 1));
  std::vector<InputStateSpec> out;
  for (double phase : config.squeezing_phases)
    for (double x : axis)
      for (double p : axis)
        out.push_back({x, p, config.squeezing_db, phase});
  return out;
}

MemoryFidelityReport memory_fidelity_report(const MemoryConfig& config, const std::vector<InputStateSpec>& inputs,
                                            const std::function<GaussianState(const GaussianState&)>& channel) {
  require(!inputs.empty(), ErrorCode::InvalidArgument, "memory: empty input set");
  const ModeId mode = maps::ReadingModes{}.rising_cos;
  MemoryFidelityReport r;
  r.min_fidelity = 1.0;
  double sum = 0.0;
  for (const auto& spec : inputs) {
    const auto in = make_input_state(spec, mode);
    const double f = fidelity(channel(in), memory_target(in));
    sum += f;
    r.min_fidelity = std::min(r.min_fidelity, f);
  }
  r.num_inputs = inputs.size();
  r.mean_fidelity = sum / static_cast<double>(inputs.size());
  if (config.classical_benchmark)
    r.beats_benchmark = r.mean_fidelity > *config.classical_benchmark;
  return r;
}

MemoryFidelityReport memory_fidelity_report(const MemoryConfig& config, const std::vector<InputStateSpec>& inputs) {
  config.validate();
  return memory_fidelity_report(config, inputs, [&](const GaussianState& in) { return memory_store(config, in); });
}

// ---------------------------------------------------------------------------
// Magnetometry

void MagnetometryConfig::validate() const {
  require_positive(n_atoms, "n_atoms");
  require_non_negative(b_rf, "b_rf");
  require_positive(tau, "tau");
  require(t2 > 0.0, ErrorCode::InvalidArgument, "t2 must be positive");
  require(std::isfinite(omega) && omega != 0.0, ErrorCode::InvalidArgument, "omega must be nonzero");
  require_positive(gyromagnetic, "gyromagnetic");
  require_positive(probe_kappa, "probe_kappa");
  require_positive(calibration, "calibration");
  require_non_negative(technical_noise, "technical_noise");
}

namespace {

// ∫₀^τ e^{−(τ−t)/T2} dt
double decayed_time(double tau, double t2) {
  if (std::isinf(t2))
    return tau;
  return -t2 * std::expm1(-tau / t2);
}

}  // namespace

MagnetometryResult magnetometry_run(const MagnetometryConfig& c) {
  c.validate();
  MagnetometryResult r;
  const double response = c.calibration * c.gyromagnetic * c.spin_length() * decayed_time(c.tau, c.t2);
  r.mean_displacement = response * c.b_rf;
  r.pn_variance = 2.0 * c.n_atoms;
  r.noise_variance = r.pn_variance * (1.0 + 1.0 / (c.probe_kappa * c.probe_kappa)) + c.technical_noise;
  const double sigma = std::sqrt(r.noise_variance);
  r.snr = r.mean_displacement / sigma;
  r.sensitivity = sigma / response * std::sqrt(c.tau);
  return r;
}

std::vector<SnrPoint> entanglement_assisted_snr(const MagnetometryConfig& config, double pre_probe_kappa,
                                                const std::vector<double>& taus, double extra_decoherence) {
  config.validate();
  require_non_negative(pre_probe_kappa, "pre_probe_kappa");
  require_non_negative(extra_decoherence, "extra decoherence rate");

  const ModeId atom{"A", ModeKind::Atomic};
  const ModeId probe{"pre_probe", ModeKind::LightCos};
  auto prepared = vacuum({atom});
  if (pre_probe_kappa > 0.0) {
    auto s = tensor(prepared, vacuum({probe}));
    s = apply_map(s, maps::qnd_single_pass(pre_probe_kappa, atom, probe));
    prepared = homodyne_condition(s, probe.label, Quadrature::X, 0.0).state;
  }
  const double rate = (std::isinf(config.t2) ? 0.0 : 1.0 / config.t2) + extra_decoherence;
  const Eigen::VectorXcd lowering = (Eigen::VectorXcd(2) << kInvSqrt2, std::complex<double>(0.0, kInvSqrt2)).finished();
  const auto decay = dissipative::make_model({atom}, {lowering}, {rate});

  std::vector<SnrPoint> out;
  for (double tau : taus) {
    auto c = config;
    c.tau = tau;
    const auto base = magnetometry_run(c);
    const double var_p = dissipative::evolve(decay, prepared, tau).variance(atom.label, Quadrature::P);
    const double shot = base.pn_variance / (c.probe_kappa * c.probe_kappa);
    const double noise_css = base.pn_variance + shot + c.technical_noise;
    const double noise_ent = base.pn_variance * var_p / constants::kVacuumVariance + shot + c.technical_noise;
    out.push_back({tau, base.mean_displacement / std::sqrt(noise_css), base.mean_displacement / std::sqrt(noise_ent),
                   std::sqrt(noise_css / noise_ent)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spin squeezing

void SqueezingBudget::validate() const {
  require_non_negative(d, "optical depth d");
  require(std::isfinite(eta) && eta >= 0.0 && eta < 1.0, ErrorCode::InvalidArgument, "eta must lie in [0, 1)");
  require_non_negative(a, "level-scheme constant a");
  require_positive(n_atoms, "n_atoms");
}

double spin_squeezing_xi(const SqueezingBudget& b) {
  b.validate();
  const double one_minus = 1.0 - b.eta;
  return (1.0 / (1.0 + b.d * b.eta) + b.a * b.eta) / (one_minus * one_minus);
}

EtaOptimum optimize_eta(double d, double a) {
  require_non_negative(d, "optical depth d");
  require_non_negative(a, "level-scheme constant a");
  // dξ/dη at η=0 is 2 + a − d
  require(d > 2.0 + a, ErrorCode::InvalidArgument, "no interior minimum of ξ (needs d > 2 + a)");
  auto xi = [&](double eta) { return spin_squeezing_xi({d, eta, a, 1.0}); };

  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 0.0, hi = 1.0 - 1e-12;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = xi(x1), f2 = xi(x2);
  while (hi - lo > 1e-13) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = xi(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = xi(x2);
    }
  }
  const double eta = 0.5 * (lo + hi);
  return {eta, xi(eta)};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument, "slope fit needs two or more points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, ErrorCode::InvalidArgument, "log-log fit needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

HeisenbergScan heisenberg_scan(const std::function<double(double)>& d_of_n, const std::vector<double>& n_values,
                               double a) {
  require(n_values.size() >= 2, ErrorCode::InvalidArgument, "scan needs two or more atom numbers");
  HeisenbergScan scan;
  std::vector<double> ns, precision, css, xis;
  double last_d = -1.0;
  for (double n : n_values) {
    require_positive(n, "atom number");
    const double d = d_of_n(n);
    require(d > last_d, ErrorCode::InvalidArgument, "d(N) must increase with N");
    last_d = d;
    const auto opt = optimize_eta(d, a);
    HeisenbergRow row{n, d, opt.eta_star, opt.xi_min, opt.xi_min * n, std::sqrt(opt.xi_min / n), 1.0 / std::sqrt(n)};
    scan.rows.push_back(row);
    ns.push_back(n);
    precision.push_back(row.angular_precision);
    css.push_back(row.css_precision);
    xis.push_back(row.xi_min);
  }
  scan.precision_slope = loglog_slope(ns, precision);
  scan.css_slope = loglog_slope(ns, css);
  scan.xi_slope = loglog_slope(ns, xis);
  scan.xi_slope_discrepancy = scan.xi_slope - scan.sqrt_claim_xi_slope;
  return scan;
}

// ---------------------------------------------------------------------------
// Optomechanics

double OptomechParams::x_zpf() const { return std::sqrt(constants::kHbar / (2.0 * mass * omega_m)); }

double OptomechParams::n_bar() const {
  return constants::kBoltzmann * temperature / (constants::kHbar * omega_m);
}

void OptomechParams::validate() const {
  require_positive(k, "wavenumber k");
  require_positive(mass, "mass");
  require_positive(omega_m, "omega_m");
  require_positive(finesse, "finesse");
  require_positive(n_photons, "n_photons");
  require_positive(q_factor, "Q");
  require_non_negative(temperature, "temperature");
}

OptomechParams OptomechParams::preset() {
  OptomechParams p;
  p.k = 2.0 * constants::kPi / 1064e-9;
  p.mass = 1e-12;
  p.omega_m = 2.0 * constants::kPi * 1e6;
  p.finesse = 1000.0;
  p.n_photons = 8.6e8;
  p.q_factor = 1e6;
  p.temperature = 0.48e-3;
  return p;
}

double optomech_kappa(const OptomechParams& p) {
  p.validate();
  return 2.0 * p.k * p.x_zpf() * std::sqrt(p.n_photons) * p.finesse;
}

HybridResult hybrid_epr_protocol(double n_bar, double kappa) {
  require_non_negative(n_bar, "n_bar");
  require_non_negative(kappa, "kappa");
  const ModeId atom{"A", ModeKind::Atomic};
  const ModeId mech{"M", ModeKind::Mechanical};
  const maps::TwoCellModes modes{{"H_cos", ModeKind::Atomic},
                                 {"H_sin", ModeKind::Atomic},
                                 {"L_cos", ModeKind::LightCos},
                                 {"L_sin", ModeKind::LightSin}};

  auto s = tensor(vacuum({atom}), thermal({mech}, n_bar));
  s = apply_map(s, hybrid_epr_basis(atom, mech, modes.atom_cos, modes.atom_sin));
  s = tensor(s, vacuum({modes.light_cos, modes.light_sin}));
  s = apply_map(s, maps::qnd_two_cell(std::sqrt(2.0) * kappa, modes));

  HybridResult r;
  r.closed_form = 1.0 / (1.0 / (1.0 + n_bar) + 2.0 * kappa * kappa);
  r.joint = conditioned_sector_variance(s, modes);
  const std::pair<const ModeId*, const ModeId*> sectors[2] = {{&modes.atom_cos, &modes.light_cos},
                                                              {&modes.atom_sin, &modes.light_sin}};
  for (const auto& [system, light] : sectors) {
    const auto sector = reduce(s, {system->label, light->label});
    r.per_sector += homodyne_condition(sector, light->label, Quadrature::X, 0.0).state.variance(system->label, Quadrature::P);
  }
  r.entangled = r.per_sector < constants::kEprBound - constants::kEprMargin;
  return r;
}

HybridResult hybrid_epr_protocol(const OptomechParams& params, double kappa) {
  params.validate();
  return hybrid_epr_protocol(params.n_bar(), kappa);
}

// ---------------------------------------------------------------------------
// Dissipative time course

void TimecourseConfig::validate() const {
  require(std::isfinite(z) && z > 0.0, ErrorCode::InvalidArgument, "Z must be positive");
  require_positive(optical_depth, "optical_depth");
  require_positive(gamma, "gamma");
  require_non_negative(decay_rate, "decay_rate");
  require_non_negative(loss_rate, "loss_rate");
  require_non_negative(pump_rate, "pump_rate");
  require_non_negative(repump_rate, "repump_rate");
  require_positive(duration, "duration");
  require(steps >= 1, ErrorCode::InvalidArgument, "steps must be at least 1");
  require_non_negative(probe_kappa, "probe_kappa");
}

double conditioned_epr_variance(const GaussianState& ensembles, const ModeId& first, const ModeId& second,
                                double kappa) {
  const maps::TwoCellModes modes{{"EPR_cos", ModeKind::Atomic},
                                 {"EPR_sin", ModeKind::Atomic},
                                 {"probe_cos", ModeKind::LightCos},
                                 {"probe_sin", ModeKind::LightSin}};
  auto s = apply_map(ensembles, ensemble_epr_basis(first, second, modes.atom_cos, modes.atom_sin));
  s = tensor(s, vacuum({modes.light_cos, modes.light_sin}));
  s = apply_map(s, maps::qnd_two_cell(kappa, modes));
  return conditioned_sector_variance(s, modes);
}

TimecourseResult dissipative_timecourse(const TimecourseConfig& c) {
  c.validate();
  const double mu = 0.5 * (c.z + 1.0 / c.z);
  const double nu = 0.5 * (c.z - 1.0 / c.z);
  const dissipative::EnsembleModes modes;
  auto state = vacuum({modes.first, modes.second});
  const double dt = c.duration / c.steps;
  const double relax = c.loss_rate + c.repump_rate;
  const double p_eq = relax > 0.0 ? c.repump_rate / relax : 1.0;

  TimecourseResult r;
  double population = 1.0;
  bool was_entangled = false;
  auto record = [&](double t) {
    const auto rep = dissipative::entanglement_report(state, modes.first.label, modes.second.label);
    r.points.push_back({t, population, rep.epr_variance, rep.entangled});
    if (rep.entangled)
      was_entangled = true;
    else if (was_entangled && !r.entanglement_lost_at)
      r.entanglement_lost_at = t;
  };
  record(0.0);
  for (int step = 1; step <= c.steps; ++step) {
    const double depth = std::max(c.optical_depth * population, 1e-300);
    auto model = dissipative::build_ideal_model(mu, nu, depth, c.gamma, modes);
    model = dissipative::add_noise_channel(model, dissipative::NoiseKind::SingleAtomDecay, c.decay_rate);
    model = dissipative::add_noise_channel(model, dissipative::NoiseKind::Pump, c.pump_rate);
    model = dissipative::add_noise_channel(model, dissipative::NoiseKind::Repump, c.repump_rate);
    state = dissipative::evolve(model, state, dt);
    population = p_eq + (population - p_eq) * std::exp(-relax * dt);
    record(step * dt);
  }
  r.final_unconditioned = r.points.back().epr_variance;
  r.final_conditioned = conditioned_epr_variance(state, modes.first, modes.second, c.probe_kappa);
  return r;
}

}  // namespace qlmi::protocols
