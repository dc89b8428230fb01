#include "qlmi/scenario.hpp"

#include "qlmi/constants.hpp"
#include "qlmi/dissipative.hpp"
#include "qlmi/error.hpp"
#include "qlmi/fock.hpp"
#include "qlmi/level_structure.hpp"
#include "qlmi/protocols.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace qlmi::scenario {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Kinds {
  Kind kind;
  const char* name;
};

constexpr Kinds kKinds[] = {
    {Kind::DissipativeSteadyState, "dissipative_steady_state"},
    {Kind::DissipativeTimecourse, "dissipative_timecourse"},
    {Kind::Memory, "memory"},
    {Kind::Magnetometry, "magnetometry"},
    {Kind::SqueezingScan, "squeezing_scan"},
    {Kind::HybridOptomech, "hybrid_optomech"},
    {Kind::ZParameter, "z_parameter"},
};

// ---------------------------------------------------------------------------
// Parameter schema

enum class Type { Number, Integer, Text };

struct Spec {
  std::string name;
  Type type = Type::Number;
  Json fallback;
  double lo = -kInf;
  double hi = kInf;
  bool lo_open = false;
  bool hi_open = false;
  bool nullable = false;
  std::vector<std::string> choices;
};

Spec number(std::string name, double def, double lo = -kInf, double hi = kInf, bool lo_open = false,
            bool hi_open = false) {
  return {std::move(name), Type::Number, def, lo, hi, lo_open, hi_open, false, {}};
}
Spec positive(std::string name, double def) { return number(std::move(name), def, 0.0, kInf, true); }
Spec non_negative(std::string name, double def) { return number(std::move(name), def, 0.0); }
Spec optional_number(std::string name, double lo, double hi, bool lo_open = false) {
  return {std::move(name), Type::Number, nullptr, lo, hi, lo_open, false, true, {}};
}
Spec integer(std::string name, long long def, double lo, double hi) {
  return {std::move(name), Type::Integer, def, lo, hi, false, false, false, {}};
}
Spec text(std::string name, std::string def, std::vector<std::string> choices = {}) {
  return {std::move(name), Type::Text, std::move(def), -kInf, kInf, false, false, false, std::move(choices)};
}

const std::vector<Spec>& schema(Kind kind) {
  static const std::vector<Spec> z_parameter = {
      number("detuning_mhz", 850.0),
      text("polarization", "y", {"x", "y"}),
      text("data_file", ""),
      positive("rabi_frequency", 1.0),
  };
  static const std::vector<Spec> steady = {
      positive("z", 2.5),
      non_negative("optical_depth", 30.0),
      non_negative("gamma", 1.0),
      text("jump_model", "ideal", {"ideal", "balanced"}),
      non_negative("decay_rate", 0.0),
      non_negative("pump_rate", 0.0),
      non_negative("repump_rate", 0.0),
      non_negative("dephasing_rate", 0.0),
      integer("fock_cutoff", 0, 0, 60),
  };
  static const std::vector<Spec> timecourse = {
      positive("z", 2.5),
      positive("optical_depth", 30.0),
      positive("gamma", 1.0),
      non_negative("decay_rate", 0.5),
      non_negative("loss_rate", 0.05),
      non_negative("pump_rate", 0.0),
      non_negative("repump_rate", 0.0),
      positive("duration", 200.0),
      integer("steps", 400, 1, 1e7),
      non_negative("probe_kappa", 1.0),
      integer("record_every", 10, 1, 1e7),
  };
  static const std::vector<Spec> memory = {
      positive("z", 2.5),
      positive("kappa", 1.0),
      non_negative("gain", 1.0),
      non_negative("presqueeze_kappa", 0.0),
      non_negative("displacement_max", 3.8),
      integer("grid_points", 9, 1, 201),
      non_negative("squeezing_db", 6.0),
      optional_number("classical_benchmark", 0.0, 1.0),
      integer("shots", 0, 0, 1e7),
      number("input_x", 0.0),
      number("input_p", 0.0),
  };
  static const std::vector<Spec> magnetometry = {
      positive("n_atoms", 1.5e12),
      non_negative("b_rf", 0.0),
      positive("tau", 22e-3),
      positive("t2", 30e-3),
      positive("larmor_frequency_hz", 322e3),
      positive("gyromagnetic", 2.0 * constants::kPi * 3.5e9),
      positive("probe_kappa", 1.0),
      positive("calibration", 0.5),
      non_negative("technical_noise", 0.0),
      non_negative("pre_probe_kappa", 0.0),
      non_negative("extra_decoherence", 0.0),
  };
  static const std::vector<Spec> squeezing = {
      non_negative("d", 100.0),
      non_negative("a", 0.0),
      number("eta", 98.0 / 300.0, 0.0, 1.0, false, true),
      positive("n_atoms", 1e6),
      positive("depth_per_atom", 0.1),
      positive("n_min", 1e3),
      positive("n_max", 1e7),
      integer("points", 9, 2, 1000),
  };
  static const std::vector<Spec> hybrid = {
      optional_number("n_bar", 0.0, kInf),
      optional_number("kappa", 0.0, kInf),
      positive("wavelength_nm", 1064.0),
      positive("mass", 1e-12),
      positive("mechanical_frequency_hz", 1e6),
      positive("finesse", 1000.0),
      positive("n_photons", 8.6e8),
      positive("q_factor", 1e6),
      non_negative("temperature", 0.48e-3),
  };
  switch (kind) {
    case Kind::ZParameter: return z_parameter;
    case Kind::DissipativeSteadyState: return steady;
    case Kind::DissipativeTimecourse: return timecourse;
    case Kind::Memory: return memory;
    case Kind::Magnetometry: return magnetometry;
    case Kind::SqueezingScan: return squeezing;
    case Kind::HybridOptomech: return hybrid;
  }
  fail(ErrorCode::InvalidArgument, "unknown scenario kind");
}

const Spec* find_spec(Kind kind, const std::string& name) {
  for (const auto& s : schema(kind))
    if (s.name == name)
      return &s;
  return nullptr;
}

std::string format_bound(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Empty when `value` satisfies `spec`.
std::string check_value(const Spec& spec, const Json& value) {
  if (value.is_null())
    return spec.nullable ? "" : "must not be null";
  if (spec.type == Type::Text) {
    if (!value.is_string())
      return "expected a string";
    const auto s = value.get<std::string>();
    if (!spec.choices.empty() && std::find(spec.choices.begin(), spec.choices.end(), s) == spec.choices.end()) {
      std::string allowed;
      for (const auto& c : spec.choices)
        allowed += (allowed.empty() ? "" : ", ") + c;
      return "'" + s + "' is not one of " + allowed;
    }
    return "";
  }
  if (!value.is_number())
    return spec.type == Type::Integer ? "expected an integer" : "expected a number";
  const double v = value.get<double>();
  if (std::isnan(v))
    return "must not be NaN";
  if (spec.type == Type::Integer && (!std::isfinite(v) || v != std::floor(v)))
    return "expected an integer";
  const bool below = spec.lo_open ? !(v > spec.lo) : !(v >= spec.lo);
  const bool above = spec.hi_open ? !(v < spec.hi) : !(v <= spec.hi);
  if (below || above) {
    std::string range = (spec.lo_open ? "(" : "[") + format_bound(spec.lo) + ", " + format_bound(spec.hi) +
                        (spec.hi_open ? ")" : "]");
    return "value " + format_bound(v) + " outside " + range;
  }
  return "";
}

// ---------------------------------------------------------------------------
// YAML to JSON

Json to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      for (const auto& item : node)
        out.push_back(to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& kv : node)
        out[kv.first.as<std::string>()] = to_json(kv.second);
      return out;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string& s = node.Scalar();
  if (node.Tag() == "!")
    return s;
  if (s == "true" || s == "True")
    return true;
  if (s == "false" || s == "False")
    return false;
  if (s == "~" || s == "null")
    return nullptr;
  long long i = 0;
  if (s.find_first_of(".eEnN") == std::string::npos && YAML::convert<long long>::decode(node, i))
    return i;
  double d = 0.0;
  if (YAML::convert<double>::decode(node, d))
    return d;
  return s;
}

// ---------------------------------------------------------------------------
// Parameter access

double num(const Json& p, const char* key) { return p.at(key).get<double>(); }
int whole(const Json& p, const char* key) { return static_cast<int>(p.at(key).get<double>()); }
std::string str(const Json& p, const char* key) { return p.at(key).get<std::string>(); }
std::optional<double> maybe(const Json& p, const char* key) {
  if (p.at(key).is_null())
    return std::nullopt;
  return p.at(key).get<double>();
}

// μ, ν with μ²−ν² = 1 and (μ+ν)/(μ−ν) = Z².
std::pair<double, double> mu_nu(double z) { return {0.5 * (z + 1.0 / z), 0.5 * (z - 1.0 / z)}; }

void add_physicality(CellResult& cell, const GaussianState& state, const std::string& tag) {
  const auto report = check_physical(state);
  cell.diagnostics[tag + "_min_symplectic_eigenvalue"] = report.min_symplectic_eigenvalue;
  if (!report.physical)
    cell.physical = false;
}

// ---------------------------------------------------------------------------
// Pipelines. Each builder validates its physics and is shared by
// validate_scenario and the runners.

levels::LevelScheme z_scheme(const Json& p) {
  const auto file_name = str(p, "data_file");
  const auto file = levels::load_manifold_file(file_name.empty() ? levels::default_cesium_d2_file()
                                                                 : fs::path(file_name));
  levels::ProbeSettings probe;
  probe.detuning = 2.0 * constants::kPi * num(p, "detuning_mhz") * 1e6;
  probe.polarization = str(p, "polarization") == "x" ? levels::DrivePolarization::X : levels::DrivePolarization::Y;
  probe.rabi_frequency = num(p, "rabi_frequency");
  require(probe.detuning != 0.0, ErrorCode::InvalidArgument, "detuning must be nonzero");
  auto scheme = levels::build_scheme(file.manifold, probe);
  levels::validate(scheme);
  return scheme;
}

CellResult run_z(const Json& p) {
  const auto scheme = z_scheme(p);
  const auto res = levels::z_from_scheme(scheme);
  const auto diag = levels::diagnose(scheme);
  CellResult c;
  c.outputs["z"] = res.z;
  c.outputs["r"] = res.r;
  c.outputs["mu"] = res.mu;
  c.outputs["nu"] = res.nu;
  c.outputs["gamma_up_down"] = res.gamma_up_down;
  c.outputs["gamma_down_up"] = res.gamma_down_up;
  c.outputs["branch"] = levels::to_string(res.branch);
  c.diagnostics["far_detuned"] = diag.far_detuned;
  c.diagnostics["min_detuning_over_width"] = diag.min_detuning_over_width;
  c.diagnostics["coefficients_bounded"] = diag.coefficients_bounded;
  c.diagnostics["paths"] = scheme.paths.size();
  return c;
}

dissipative::LindbladModel steady_model(const Json& p) {
  const double z = num(p, "z");
  const bool ideal = str(p, "jump_model") == "ideal";
  require(!ideal || z > 1.0, ErrorCode::InvalidArgument, "the ideal jump model needs Z > 1");
  const auto [mu, nu] = ideal ? mu_nu(z) : std::pair<double, double>{1.0, 1.0};
  const double rate = num(p, "optical_depth") * num(p, "gamma");
  const auto jumps = ideal ? dissipative::jump_operators(mu, nu) : dissipative::jump_operators_unchecked(mu, nu);
  const dissipative::EnsembleModes modes;
  auto model = dissipative::make_model({modes.first, modes.second}, {jumps.a, jumps.b}, {rate, rate});
  const std::pair<const char*, dissipative::NoiseKind> noise[] = {
      {"decay_rate", dissipative::NoiseKind::SingleAtomDecay},
      {"pump_rate", dissipative::NoiseKind::Pump},
      {"repump_rate", dissipative::NoiseKind::Repump},
      {"dephasing_rate", dissipative::NoiseKind::Dephasing},
  };
  bool noisy = false;
  for (const auto& [key, kind] : noise)
    if (num(p, key) > 0.0) {
      model = dissipative::add_noise_channel(model, kind, num(p, key));
      noisy = true;
    }
  require(whole(p, "fock_cutoff") == 0 || (ideal && !noisy && rate > 0.0), ErrorCode::InvalidArgument,
          "fock_cutoff needs the noise-free ideal model with dΓ > 0");
  return model;
}

CellResult run_steady(const Json& p) {
  const auto model = steady_model(p);
  const auto spectrum = dissipative::is_unique(model);
  CellResult c;
  c.outputs["unique"] = spectrum.unique;
  c.outputs["max_real_part"] = spectrum.max_real_part;
  const dissipative::EnsembleModes modes;
  if (!spectrum.unique) {
    c.outputs["epr_variance"] = nullptr;
    c.outputs["entangled"] = nullptr;
    return c;
  }
  const auto state = dissipative::steady_state(model);
  const auto rep = dissipative::entanglement_report(state, modes.first.label, modes.second.label);
  c.outputs["epr_variance"] = rep.epr_variance;
  c.outputs["entangled"] = rep.entangled;
  c.outputs["inverse_z_squared"] = 1.0 / (num(p, "z") * num(p, "z"));
  add_physicality(c, state, "steady");

  const int cutoff = whole(p, "fock_cutoff");
  if (cutoff > 0) {
    const auto dark = fock::dark_state(model, cutoff);
    const auto m = fock::moments(dark.state);
    const GaussianState fs_state(state.modes(), m.mean, m.cov);
    const double fock_epr = epr_variance(fs_state, modes.first.label, modes.second.label);
    c.outputs["fock_epr_variance"] = fock_epr;
    c.outputs["fock_relative_error"] = std::abs(fock_epr - rep.epr_variance) / rep.epr_variance;
    c.diagnostics["fock_leaked"] = dark.state.leaked;
    c.diagnostics["fock_residual"] = dark.residual;
    c.diagnostics["fock_gap"] = dark.gap;
  }
  return c;
}

protocols::TimecourseConfig timecourse_config(const Json& p) {
  protocols::TimecourseConfig t;
  t.z = num(p, "z");
  t.optical_depth = num(p, "optical_depth");
  t.gamma = num(p, "gamma");
  t.decay_rate = num(p, "decay_rate");
  t.loss_rate = num(p, "loss_rate");
  t.pump_rate = num(p, "pump_rate");
  t.repump_rate = num(p, "repump_rate");
  t.duration = num(p, "duration");
  t.steps = whole(p, "steps");
  t.probe_kappa = num(p, "probe_kappa");
  t.validate();
  return t;
}

CellResult run_timecourse(const Json& p) {
  const auto res = protocols::dissipative_timecourse(timecourse_config(p));
  CellResult c;
  c.outputs["final_unconditioned"] = res.final_unconditioned;
  c.outputs["final_conditioned"] = res.final_conditioned;
  c.outputs["entanglement_lost_at"] = res.entanglement_lost_at ? Json(*res.entanglement_lost_at) : Json(nullptr);
  double best = kInf;
  for (const auto& pt : res.points)
    best = std::min(best, pt.epr_variance);
  c.outputs["min_epr_variance"] = best;
  const int every = whole(p, "record_every");
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    if (i % every != 0 && i + 1 != res.points.size())
      continue;
    const auto& pt = res.points[i];
    c.series.push_back({{"t", pt.t}, {"population", pt.population}, {"epr_variance", pt.epr_variance},
                        {"entangled", pt.entangled}});
  }
  return c;
}

protocols::MemoryConfig memory_config(const Json& p) {
  auto m = protocols::MemoryConfig::with_kappa(num(p, "z"), num(p, "kappa"), num(p, "gain"));
  m.presqueeze_kappa = num(p, "presqueeze_kappa");
  m.displacement_max = num(p, "displacement_max");
  m.grid_points = whole(p, "grid_points");
  m.squeezing_db = num(p, "squeezing_db");
  m.classical_benchmark = maybe(p, "classical_benchmark");
  m.validate();
  return m;
}

CellResult run_memory(const Json& p, std::optional<std::uint64_t> seed) {
  const auto config = memory_config(p);
  const maps::ReadingModes modes;
  const auto input = protocols::make_input_state({num(p, "input_x"), num(p, "input_p"), 0.0, 0.0}, modes.rising_cos);
  const auto stored = protocols::memory_store(config, input);
  const auto target = protocols::memory_target(input);
  const auto label = modes.atom_cos.label;

  CellResult c;
  c.outputs["mean_x"] = stored.mean_of(label, Quadrature::X);
  c.outputs["mean_p"] = stored.mean_of(label, Quadrature::P);
  c.outputs["var_x"] = stored.variance(label, Quadrature::X);
  c.outputs["var_p"] = stored.variance(label, Quadrature::P);
  c.outputs["fidelity"] = fidelity(stored, target);
  const auto report = protocols::memory_fidelity_report(config, protocols::memory_input_set(config));
  c.outputs["mean_fidelity"] = report.mean_fidelity;
  c.outputs["min_fidelity"] = report.min_fidelity;
  c.outputs["beats_benchmark"] = report.beats_benchmark ? Json(*report.beats_benchmark) : Json(nullptr);
  c.diagnostics["num_inputs"] = report.num_inputs;
  c.diagnostics["swap_time"] = config.interaction.swap_time();
  add_physicality(c, stored, "stored");

  const int shots = whole(p, "shots");
  if (shots > 0) {
    Rng rng(*seed);
    auto joint = tensor(protocols::memory_initial_atoms(config),
                        tensor(input, vacuum({modes.rising_sin})));
    joint = apply_map(joint, maps::nonqnd_two_cell(config.interaction, modes));
    const double gain = -config.gain * std::exp(-config.interaction.swap_time()) / config.interaction.kappa();
    double sum_x = 0.0, sum_p = 0.0, sum_pp = 0.0, cond_var_p = 0.0;
    for (int shot = 0; shot < shots; ++shot) {
      auto first = homodyne_condition(joint, modes.falling_cos.label, Quadrature::X, rng);
      auto s = displace(first.state, modes.atom_cos.label, 0.0, gain * first.outcome);
      auto second = homodyne_condition(s, modes.falling_sin.label, Quadrature::X, rng);
      s = displace(second.state, modes.atom_sin.label, 0.0, gain * second.outcome);
      const double mp = s.mean_of(label, Quadrature::P);
      sum_x += s.mean_of(label, Quadrature::X);
      sum_p += mp;
      sum_pp += mp * mp;
      cond_var_p = s.variance(label, Quadrature::P);
    }
    const double mean_p = sum_p / shots;
    c.outputs["mc_mean_x"] = sum_x / shots;
    c.outputs["mc_mean_p"] = mean_p;
    c.outputs["mc_var_p"] = cond_var_p + (sum_pp / shots - mean_p * mean_p);
    c.diagnostics["shots"] = shots;
  }
  return c;
}

protocols::MagnetometryConfig magnetometry_config(const Json& p) {
  protocols::MagnetometryConfig m;
  m.n_atoms = num(p, "n_atoms");
  m.b_rf = num(p, "b_rf");
  m.tau = num(p, "tau");
  m.t2 = num(p, "t2");
  m.omega = 2.0 * constants::kPi * num(p, "larmor_frequency_hz");
  m.gyromagnetic = num(p, "gyromagnetic");
  m.probe_kappa = num(p, "probe_kappa");
  m.calibration = num(p, "calibration");
  m.technical_noise = num(p, "technical_noise");
  m.validate();
  return m;
}

CellResult run_magnetometry(const Json& p) {
  const auto config = magnetometry_config(p);
  const auto res = protocols::magnetometry_run(config);
  CellResult c;
  c.outputs["sensitivity"] = res.sensitivity;
  c.outputs["mean_displacement"] = res.mean_displacement;
  c.outputs["pn_variance"] = res.pn_variance;
  c.outputs["noise_variance"] = res.noise_variance;
  c.outputs["snr"] = res.snr;
  const double pre = num(p, "pre_probe_kappa");
  if (pre > 0.0) {
    const auto pt = protocols::entanglement_assisted_snr(config, pre, {config.tau}, num(p, "extra_decoherence"));
    c.outputs["snr_css"] = pt.front().snr_css;
    c.outputs["snr_entangled"] = pt.front().snr_entangled;
    c.outputs["snr_ratio"] = pt.front().ratio;
  }
  c.diagnostics["duration_advisory_ok"] = config.duration_advisory_ok();
  c.diagnostics["larmor_cycles"] = config.omega * config.tau / (2.0 * constants::kPi);
  return c;
}

void check_squeezing(const Json& p) {
  require(num(p, "n_max") > num(p, "n_min"), ErrorCode::InvalidArgument, "n_max must exceed n_min");
  require(num(p, "depth_per_atom") * num(p, "n_min") > 2.0 + num(p, "a"), ErrorCode::InvalidArgument,
          "depth_per_atom·n_min must exceed 2 + a for an interior optimum along the scan");
  protocols::SqueezingBudget{num(p, "d"), num(p, "eta"), num(p, "a"), num(p, "n_atoms")}.validate();
}

CellResult run_squeezing(const Json& p) {
  check_squeezing(p);
  const double d = num(p, "d");
  const double a = num(p, "a");
  CellResult c;
  c.outputs["xi"] = protocols::spin_squeezing_xi({d, num(p, "eta"), a, num(p, "n_atoms")});
  if (d > 2.0 + a) {
    const auto opt = protocols::optimize_eta(d, a);
    c.outputs["eta_star"] = opt.eta_star;
    c.outputs["xi_min"] = opt.xi_min;
  } else {
    c.outputs["eta_star"] = 0.0;
    c.outputs["xi_min"] = 1.0;
  }
  c.diagnostics["interior_minimum"] = d > 2.0 + a;

  const int points = whole(p, "points");
  const double lo = std::log(num(p, "n_min"));
  const double hi = std::log(num(p, "n_max"));
  std::vector<double> ns;
  for (int i = 0; i < points; ++i)
    ns.push_back(std::exp(lo + (hi - lo) * i / (points - 1)));
  const double per_atom = num(p, "depth_per_atom");
  const auto scan = protocols::heisenberg_scan([per_atom](double n) { return per_atom * n; }, ns, a);
  c.outputs["precision_slope"] = scan.precision_slope;
  c.outputs["css_slope"] = scan.css_slope;
  c.outputs["xi_slope"] = scan.xi_slope;
  c.outputs["sqrt_claim_xi_slope"] = scan.sqrt_claim_xi_slope;
  c.outputs["xi_slope_discrepancy"] = scan.xi_slope_discrepancy;
  for (const auto& row : scan.rows)
    c.series.push_back({{"n_atoms", row.n_atoms},
                        {"d", row.d},
                        {"eta_star", row.eta_star},
                        {"xi_min", row.xi_min},
                        {"xi_times_n", row.xi_times_n},
                        {"angular_precision", row.angular_precision},
                        {"css_precision", row.css_precision}});
  return c;
}

protocols::OptomechParams optomech_params(const Json& p) {
  protocols::OptomechParams o;
  o.k = 2.0 * constants::kPi / (num(p, "wavelength_nm") * 1e-9);
  o.mass = num(p, "mass");
  o.omega_m = 2.0 * constants::kPi * num(p, "mechanical_frequency_hz");
  o.finesse = num(p, "finesse");
  o.n_photons = num(p, "n_photons");
  o.q_factor = num(p, "q_factor");
  o.temperature = num(p, "temperature");
  o.validate();
  return o;
}

CellResult run_hybrid(const Json& p) {
  const auto params = optomech_params(p);
  const double n_bar = maybe(p, "n_bar").value_or(params.n_bar());
  const double kappa = maybe(p, "kappa").value_or(protocols::optomech_kappa(params));
  const auto res = protocols::hybrid_epr_protocol(n_bar, kappa);
  CellResult c;
  c.outputs["n_bar"] = n_bar;
  c.outputs["kappa"] = kappa;
  c.outputs["closed_form"] = res.closed_form;
  c.outputs["per_sector"] = res.per_sector;
  c.outputs["joint"] = res.joint;
  c.outputs["entangled"] = res.entangled;
  c.diagnostics["mechanical_linewidth"] = params.mechanical_linewidth();
  return c;
}

void check_cell(Kind kind, const Json& p) {
  switch (kind) {
    case Kind::ZParameter: z_scheme(p); return;
    case Kind::DissipativeSteadyState: steady_model(p); return;
    case Kind::DissipativeTimecourse: timecourse_config(p); return;
    case Kind::Memory: memory_config(p); return;
    case Kind::Magnetometry: magnetometry_config(p); return;
    case Kind::SqueezingScan: check_squeezing(p); return;
    case Kind::HybridOptomech: optomech_params(p); return;
  }
}

CellResult run_cell(Kind kind, const Json& p, std::optional<std::uint64_t> seed) {
  switch (kind) {
    case Kind::ZParameter: return run_z(p);
    case Kind::DissipativeSteadyState: return run_steady(p);
    case Kind::DissipativeTimecourse: return run_timecourse(p);
    case Kind::Memory: return run_memory(p, seed);
    case Kind::Magnetometry: return run_magnetometry(p);
    case Kind::SqueezingScan: return run_squeezing(p);
    case Kind::HybridOptomech: return run_hybrid(p);
  }
  fail(ErrorCode::InvalidArgument, "unknown scenario kind");
}

// ---------------------------------------------------------------------------
// Output

std::string csv_value(const Json& v) {
  if (v.is_null())
    return "";
  if (v.is_boolean())
    return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer())
    return v.dump();
  if (v.is_number()) {
    const double d = v.get<double>();
    if (std::isnan(d))
      return "nan";
    if (std::isinf(d))
      return d > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
  }
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"')
      quoted += '"';
    quoted += ch;
  }
  return quoted + "\"";
}

void collect_keys(const Json& obj, std::vector<std::string>& keys) {
  for (const auto& [k, _] : obj.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      keys.push_back(k);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  require(static_cast<bool>(out), ErrorCode::IoError, "write failed: " + path.string());
}

std::string join_row(const std::vector<std::string>& cols) {
  std::string row;
  for (std::size_t i = 0; i < cols.size(); ++i)
    row += (i ? "," : "") + cols[i];
  return row + "\n";
}

std::string csv_document(const std::vector<CellResult>& cells, bool stochastic) {
  std::vector<std::string> param_keys, output_keys, diag_keys;
  for (const auto& c : cells) {
    collect_keys(c.params, param_keys);
    collect_keys(c.outputs, output_keys);
    collect_keys(c.diagnostics, diag_keys);
  }
  std::vector<std::string> header{"cell"};
  if (stochastic)
    header.push_back("seed");
  header.insert(header.end(), param_keys.begin(), param_keys.end());
  header.insert(header.end(), output_keys.begin(), output_keys.end());
  for (const auto& k : diag_keys)
    header.push_back("diag_" + k);
  header.push_back("physical");
  std::string doc = join_row(header);
  for (const auto& c : cells) {
    std::vector<std::string> row{std::to_string(c.index)};
    if (stochastic)
      row.push_back(c.seed ? std::to_string(*c.seed) : "");
    for (const auto& k : param_keys)
      row.push_back(csv_value(c.params.contains(k) ? c.params[k] : Json()));
    for (const auto& k : output_keys)
      row.push_back(csv_value(c.outputs.contains(k) ? c.outputs[k] : Json()));
    for (const auto& k : diag_keys)
      row.push_back(csv_value(c.diagnostics.contains(k) ? c.diagnostics[k] : Json()));
    row.push_back(c.physical ? "true" : "false");
    doc += join_row(row);
  }
  return doc;
}

std::string series_document(const std::vector<CellResult>& cells, const std::vector<SweepAxis>& sweep) {
  std::vector<std::string> keys;
  for (const auto& c : cells)
    for (const auto& row : c.series)
      collect_keys(row, keys);
  std::vector<std::string> header{"cell"};
  for (const auto& axis : sweep)
    header.push_back(axis.name);
  header.insert(header.end(), keys.begin(), keys.end());
  std::string doc = join_row(header);
  for (const auto& c : cells)
    for (const auto& point : c.series) {
      std::vector<std::string> row{std::to_string(c.index)};
      for (const auto& axis : sweep)
        row.push_back(csv_value(c.params[axis.name]));
      for (const auto& k : keys)
        row.push_back(csv_value(point.contains(k) ? point[k] : Json()));
      doc += join_row(row);
    }
  return doc;
}

Json cell_json(const CellResult& c) {
  Json j;
  j["index"] = c.index;
  if (c.seed)
    j["seed"] = *c.seed;
  j["params"] = c.params;
  j["outputs"] = c.outputs;
  j["diagnostics"] = c.diagnostics;
  if (!c.series.empty())
    j["series"] = c.series;
  j["physical"] = c.physical;
  return j;
}

std::string violation_text(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations)
    out += (out.empty() ? "" : "\n") + v.field + ": " + v.message;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

const char* to_string(Kind kind) noexcept {
  for (const auto& k : kKinds)
    if (k.kind == kind)
      return k.name;
  return "unknown";
}

std::optional<Kind> kind_from_string(std::string_view name) noexcept {
  for (const auto& k : kKinds)
    if (name == k.name)
      return k.kind;
  return std::nullopt;
}

std::optional<Format> format_from_string(std::string_view name) noexcept {
  if (name == "csv")
    return Format::Csv;
  if (name == "json")
    return Format::Json;
  return std::nullopt;
}

ScenarioConfig parse_scenario(const fs::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    fail(ErrorCode::ParseError, path.string() + ": cannot open file");
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  const auto where = [&](const std::string& field) { return path.string() + ": " + field; };
  require(root.IsMap(), ErrorCode::ParseError, where("top level must be a mapping"));

  static const std::set<std::string> known = {"id", "kind", "description", "anchor", "seed",
                                              "params", "sweep", "output"};
  ScenarioConfig c;
  c.source = path;
  c.id = path.stem().string();
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    require(known.count(key) > 0, ErrorCode::ParseError, where("unknown top-level key '" + key + "'"));
  }
  const auto scalar = [&](const char* key) -> std::string {
    const auto node = root[key];
    if (!node)
      return "";
    require(node.IsScalar(), ErrorCode::ParseError, where(std::string(key) + " must be a scalar"));
    return node.Scalar();
  };
  if (root["id"])
    c.id = scalar("id");
  c.kind_name = scalar("kind");
  c.description = scalar("description");
  c.anchor = scalar("anchor");
  if (const auto seed = root["seed"]) {
    unsigned long long v = 0;
    require(seed.IsScalar() && YAML::convert<unsigned long long>::decode(seed, v) &&
                seed.Scalar().find_first_not_of("0123456789") == std::string::npos,
            ErrorCode::ParseError, where("seed must be a non-negative integer"));
    c.seed = v;
  }
  if (const auto params = root["params"]) {
    require(params.IsMap() || params.IsNull(), ErrorCode::ParseError, where("params must be a mapping"));
    if (params.IsMap())
      c.params = to_json(params);
  }
  if (const auto sweep = root["sweep"]) {
    require(sweep.IsSequence() || sweep.IsNull(), ErrorCode::ParseError, where("sweep must be a list"));
    std::size_t i = 0;
    for (const auto& axis : sweep) {
      const auto field = "sweep[" + std::to_string(i++) + "]";
      require(axis.IsMap() && axis["name"] && axis["name"].IsScalar() && axis["values"] &&
                  axis["values"].IsSequence(),
              ErrorCode::ParseError, where(field + " needs a scalar name and a list of values"));
      SweepAxis a{axis["name"].Scalar(), {}};
      for (const auto& v : axis["values"])
        a.values.push_back(to_json(v));
      c.sweep.push_back(std::move(a));
    }
  }
  if (const auto output = root["output"]) {
    require(output.IsMap(), ErrorCode::ParseError, where("output must be a mapping"));
    for (const auto& kv : output) {
      const auto key = kv.first.as<std::string>();
      require(key == "format" || key == "name", ErrorCode::ParseError,
              where("unknown output key '" + key + "'"));
      require(kv.second.IsScalar(), ErrorCode::ParseError, where("output." + key + " must be a scalar"));
      (key == "format" ? c.format_name : c.output_name) = kv.second.Scalar();
    }
  }
  return c;
}

bool is_stochastic(const ScenarioConfig& config) {
  if (kind_from_string(config.kind_name) != Kind::Memory)
    return false;
  const auto positive_shots = [](const Json& v) { return v.is_number() && v.get<double>() > 0.0; };
  if (config.params.contains("shots") && positive_shots(config.params["shots"]))
    return true;
  for (const auto& axis : config.sweep)
    if (axis.name == "shots")
      for (const auto& v : axis.values)
        if (positive_shots(v))
          return true;
  return false;
}

std::vector<Json> expand_cells(const ScenarioConfig& config) {
  const auto kind = kind_from_string(config.kind_name);
  require(kind.has_value(), ErrorCode::ValidationError, "unknown kind '" + config.kind_name + "'");
  Json base = Json::object();
  for (const auto& spec : schema(*kind))
    base[spec.name] = config.params.contains(spec.name) ? config.params[spec.name] : spec.fallback;

  std::vector<Json> cells{base};
  for (const auto& axis : config.sweep) {
    std::vector<Json> next;
    for (const auto& cell : cells)
      for (const auto& v : axis.values) {
        Json c = cell;
        c[axis.name] = v;
        next.push_back(std::move(c));
      }
    cells = std::move(next);
  }
  return cells;
}

std::vector<Violation> validate_scenario(const ScenarioConfig& config) {
  std::vector<Violation> out;
  if (config.id.empty())
    out.push_back({"id", "must not be empty"});
  if (!config.format_name.empty() && !format_from_string(config.format_name))
    out.push_back({"output.format", "'" + config.format_name + "' is not one of csv, json"});
  if (config.output_name.find('/') != std::string::npos)
    out.push_back({"output.name", "must be a plain file name"});
  const auto kind = kind_from_string(config.kind_name);
  if (!kind) {
    out.push_back({"kind", config.kind_name.empty() ? "missing" : "unknown kind '" + config.kind_name + "'"});
    return out;
  }

  bool shape_ok = true;
  for (const auto& [key, value] : config.params.items()) {
    const Spec* spec = find_spec(*kind, key);
    if (!spec) {
      out.push_back({"params." + key, "unknown parameter for kind " + config.kind_name});
      shape_ok = false;
    } else if (auto msg = check_value(*spec, value); !msg.empty()) {
      out.push_back({"params." + key, msg});
      shape_ok = false;
    }
  }
  std::set<std::string> axes;
  for (std::size_t i = 0; i < config.sweep.size(); ++i) {
    const auto& axis = config.sweep[i];
    const auto field = "sweep[" + std::to_string(i) + "]";
    const Spec* spec = find_spec(*kind, axis.name);
    if (!spec) {
      out.push_back({field + ".name", "unknown parameter '" + axis.name + "'"});
      shape_ok = false;
      continue;
    }
    if (!axes.insert(axis.name).second) {
      out.push_back({field + ".name", "duplicate sweep axis '" + axis.name + "'"});
      shape_ok = false;
    }
    if (axis.values.empty()) {
      out.push_back({field + ".values", "must not be empty"});
      shape_ok = false;
    }
    for (std::size_t j = 0; j < axis.values.size(); ++j)
      if (auto msg = check_value(*spec, axis.values[j]); !msg.empty()) {
        out.push_back({field + ".values[" + std::to_string(j) + "]", axis.name + ": " + msg});
        shape_ok = false;
      }
  }
  if (is_stochastic(config) && !config.seed)
    out.push_back({"seed", "required for stochastic runs (shots > 0)"});
  if (!shape_ok)
    return out;

  const auto cells = expand_cells(config);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      check_cell(*kind, cells[i]);
    } catch (const Error& e) {
      out.push_back({"cell[" + std::to_string(i) + "]", e.what()});
    }
  }
  return out;
}

std::uint64_t cell_seed(std::uint64_t root, std::size_t index) noexcept {
  std::uint64_t z = root + (static_cast<std::uint64_t>(index) + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RunReport run_scenario(const ScenarioConfig& input, const RunOptions& options) {
  ScenarioConfig config = input;
  if (options.seed)
    config.seed = options.seed;
  const auto violations = validate_scenario(config);
  require(violations.empty(), ErrorCode::ValidationError, violation_text(violations));

  const Kind kind = *kind_from_string(config.kind_name);
  const bool stochastic = is_stochastic(config);
  const auto cells = expand_cells(config);
  const auto start = std::chrono::steady_clock::now();

  std::vector<CellResult> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size() && !failed; i = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const std::optional<std::uint64_t> seed =
            stochastic ? std::optional<std::uint64_t>(cell_seed(*config.seed, i)) : std::nullopt;
        results[i] = run_cell(kind, cells[i], seed);
        results[i].index = i;
        results[i].seed = seed;
        results[i].params = cells[i];
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
      results[i].wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(cells.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j)
      pool.emplace_back(worker);
    for (auto& t : pool)
      t.join();
  }
  for (const auto& e : errors)
    if (e)
      std::rethrow_exception(e);

  RunReport report;
  report.id = config.id;
  report.cells = std::move(results);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& c : report.cells)
    report.physical = report.physical && c.physical;

  std::error_code ec;
  fs::create_directories(options.out_dir, ec);
  require(!ec, ErrorCode::IoError, "cannot create " + options.out_dir.string() + ": " + ec.message());
  const std::string name = config.output_name.empty() ? config.id : config.output_name;
  const Format format = options.format ? *options.format
                                       : format_from_string(config.format_name).value_or(Format::Csv);
  if (format == Format::Csv) {
    const auto main = options.out_dir / (name + ".csv");
    write_file(main, csv_document(report.cells, stochastic));
    report.files.push_back(main);
    const bool has_series = std::any_of(report.cells.begin(), report.cells.end(),
                                        [](const CellResult& c) { return !c.series.empty(); });
    if (has_series) {
      const auto series = options.out_dir / (name + ".series.csv");
      write_file(series, series_document(report.cells, config.sweep));
      report.files.push_back(series);
    }
  } else {
    Json doc;
    doc["scenario"] = config.id;
    doc["kind"] = config.kind_name;
    doc["description"] = config.description;
    doc["anchor"] = config.anchor;
    if (stochastic)
      doc["seed"] = *config.seed;
    Json axes = Json::array();
    for (const auto& a : config.sweep)
      axes.push_back(a.name);
    doc["sweep"] = axes;
    doc["physical"] = report.physical;
    doc["cells"] = Json::array();
    for (const auto& c : report.cells)
      doc["cells"].push_back(cell_json(c));
    const auto main = options.out_dir / (name + ".json");
    write_file(main, doc.dump(2) + "\n");
    report.files.push_back(main);
  }

  Json timing;
  timing["scenario"] = config.id;
  timing["jobs"] = jobs;
  timing["wall_seconds"] = report.wall_seconds;
  timing["cells"] = Json::array();
  for (const auto& c : report.cells)
    timing["cells"].push_back({{"index", c.index}, {"wall_seconds", c.wall_seconds}});
  const auto timing_path = options.out_dir / (name + ".timing.json");
  write_file(timing_path, timing.dump(2) + "\n");
  report.files.push_back(timing_path);
  return report;
}

std::vector<ScenarioInfo> list_scenarios(const fs::path& dir) {
  std::error_code ec;
  require(fs::is_directory(dir, ec), ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<ScenarioInfo> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (!entry.is_regular_file() || (ext != ".yaml" && ext != ".yml"))
      continue;
    try {
      const auto c = parse_scenario(entry.path());
      out.push_back({c.id, c.kind_name, c.anchor, entry.path()});
    } catch (const Error& e) {
      out.push_back({entry.path().stem().string(), "unparseable", e.what(), entry.path()});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

fs::path default_scenario_dir() {
  if (const char* env = std::getenv("QLMI_SCENARIO_DIR"); env && *env)
    return env;
  return QLMI_SCENARIO_DIR;
}

std::string summarize(const RunReport& report) {
  constexpr std::size_t kMaxLines = 20;
  constexpr std::size_t kMaxOutputs = 6;
  std::ostringstream out;
  for (std::size_t i = 0; i < report.cells.size() && i < kMaxLines; ++i) {
    const auto& c = report.cells[i];
    out << report.id << " cell " << c.index << ":";
    std::size_t shown = 0;
    for (const auto& [k, v] : c.outputs.items()) {
      if (shown++ == kMaxOutputs)
        break;
      out << " " << k << "=" << (v.is_number_float() ? csv_value(v) : v.dump());
    }
    if (!c.physical)
      out << " [unphysical]";
    out << "\n";
  }
  if (report.cells.size() > kMaxLines)
    out << "... " << report.cells.size() - kMaxLines << " more cells\n";
  return out.str();
}

}  // namespace qlmi::scenario
