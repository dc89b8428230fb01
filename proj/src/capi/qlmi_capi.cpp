#include "qlmi/qlmi.h"

#include "qlmi/dissipative.hpp"
#include "qlmi/error.hpp"
#include "qlmi/gaussian.hpp"
#include "qlmi/level_structure.hpp"
#include "qlmi/light_matter.hpp"
#include "qlmi/protocols.hpp"
#include "qlmi/scenario.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <exception>
#include <new>
#include <optional>
#include <string>

struct qlmi_state {
  qlmi::GaussianState value;
};

struct qlmi_map {
  qlmi::SymplecticMap value;
};

namespace {

thread_local std::string g_last_error;

qlmi_status to_status(qlmi::ErrorCode code) { return static_cast<qlmi_status>(static_cast<int>(code)); }

template <class F>
qlmi_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return QLMI_OK;
  } catch (const qlmi::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return QLMI_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QLMI_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown exception";
    return QLMI_INTERNAL_ERROR;
  }
}

void need(const void* p, const char* what) {
  qlmi::require(p != nullptr, qlmi::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

std::vector<qlmi::ModeId> mode_ids(const char* const* labels, size_t n) {
  need(labels, "labels");
  std::vector<qlmi::ModeId> out;
  for (size_t i = 0; i < n; ++i) {
    need(labels[i], "label");
    out.push_back({labels[i], qlmi::ModeKind::Atomic});
  }
  return out;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out)
    throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

qlmi::Quadrature quadrature(qlmi_quadrature q) {
  qlmi::require(q == QLMI_X || q == QLMI_P, qlmi::ErrorCode::InvalidArgument, "unknown quadrature");
  return q == QLMI_X ? qlmi::Quadrature::X : qlmi::Quadrature::P;
}

void emit(qlmi_state** out, qlmi::GaussianState s) {
  need(out, "out");
  *out = new qlmi_state{std::move(s)};
}

void emit(qlmi_map** out, qlmi::SymplecticMap m) {
  need(out, "out");
  *out = new qlmi_map{std::move(m)};
}

}  // namespace

extern "C" {

const char* qlmi_version(void) { return "0.1.0"; }

const char* qlmi_last_error(void) { return g_last_error.c_str(); }

const char* qlmi_status_name(qlmi_status status) {
  if (status == QLMI_OK)
    return "ok";
  if (status == QLMI_INTERNAL_ERROR)
    return "internal error";
  return qlmi::to_string(static_cast<qlmi::ErrorCode>(status));
}

void qlmi_string_free(char* s) { std::free(s); }

qlmi_status qlmi_state_vacuum(const char* const* labels, size_t n, qlmi_state** out) {
  return guarded([&] { emit(out, qlmi::vacuum(mode_ids(labels, n))); });
}

qlmi_status qlmi_state_thermal(const char* const* labels, size_t n, double mean_occupation, qlmi_state** out) {
  return guarded([&] { emit(out, qlmi::thermal(mode_ids(labels, n), mean_occupation)); });
}

qlmi_status qlmi_state_create(const char* const* labels, size_t n, const double* mean, const double* cov,
                              qlmi_state** out) {
  return guarded([&] {
    need(mean, "mean");
    need(cov, "cov");
    const auto dim = static_cast<Eigen::Index>(2 * n);
    qlmi::Vector m = Eigen::Map<const qlmi::Vector>(mean, dim);
    qlmi::Matrix c = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cov, dim, dim);
    emit(out, qlmi::GaussianState(mode_ids(labels, n), std::move(m), std::move(c)));
  });
}

void qlmi_state_free(qlmi_state* state) { delete state; }

qlmi_status qlmi_state_num_modes(const qlmi_state* state, size_t* n) {
  return guarded([&] {
    need(state, "state");
    need(n, "n");
    *n = state->value.num_modes();
  });
}

qlmi_status qlmi_state_moments(const qlmi_state* state, double* mean, double* cov) {
  return guarded([&] {
    need(state, "state");
    const auto& s = state->value;
    const auto dim = s.mean().size();
    if (mean)
      Eigen::Map<qlmi::Vector>(mean, dim) = s.mean();
    if (cov)
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(cov, dim, dim) = s.cov();
  });
}

qlmi_status qlmi_state_epr_variance(const qlmi_state* state, const char* a, const char* b, double* out) {
  return guarded([&] {
    need(state, "state");
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = qlmi::epr_variance(state->value, a, b);
  });
}

qlmi_status qlmi_state_fidelity(const qlmi_state* a, const qlmi_state* b, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = qlmi::fidelity(a->value, b->value);
  });
}

qlmi_status qlmi_state_check_physical(const qlmi_state* state, int* physical, double* min_symplectic_eigenvalue) {
  return guarded([&] {
    need(state, "state");
    const auto r = qlmi::check_physical(state->value);
    if (physical)
      *physical = r.physical ? 1 : 0;
    if (min_symplectic_eigenvalue)
      *min_symplectic_eigenvalue = r.min_symplectic_eigenvalue;
  });
}

qlmi_status qlmi_state_homodyne(const qlmi_state* state, const char* label, qlmi_quadrature q, double outcome,
                                qlmi_state** out) {
  return guarded([&] {
    need(state, "state");
    need(label, "label");
    emit(out, qlmi::homodyne_condition(state->value, label, quadrature(q), outcome).state);
  });
}

qlmi_status qlmi_state_tensor(const qlmi_state* a, const qlmi_state* b, qlmi_state** out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    emit(out, qlmi::tensor(a->value, b->value));
  });
}

qlmi_status qlmi_map_qnd_two_cell(double kappa, qlmi_map** out) {
  return guarded([&] { emit(out, qlmi::maps::qnd_two_cell(kappa)); });
}

qlmi_status qlmi_map_qnd_single_pass(double kappa, const char* atom, const char* light, qlmi_map** out) {
  return guarded([&] {
    need(atom, "atom");
    need(light, "light");
    emit(out, qlmi::maps::qnd_single_pass(kappa, {atom, qlmi::ModeKind::Atomic}, {light, qlmi::ModeKind::LightCos}));
  });
}

qlmi_status qlmi_map_nonqnd_two_cell(double z, double gamma_s, double duration, qlmi_map** out) {
  return guarded([&] { emit(out, qlmi::maps::nonqnd_two_cell({z, gamma_s, duration, 0.0})); });
}

qlmi_status qlmi_map_long_time_limit(double z, qlmi_map** out) {
  return guarded([&] { emit(out, qlmi::maps::long_time_limit(z)); });
}

void qlmi_map_free(qlmi_map* map) { delete map; }

qlmi_status qlmi_map_dimension(const qlmi_map* map, size_t* rows) {
  return guarded([&] {
    need(map, "map");
    need(rows, "rows");
    *rows = static_cast<size_t>(map->value.matrix().rows());
  });
}

qlmi_status qlmi_map_matrix(const qlmi_map* map, double* out) {
  return guarded([&] {
    need(map, "map");
    need(out, "out");
    const auto& s = map->value.matrix();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, s.rows(), s.cols()) = s;
  });
}

qlmi_status qlmi_map_symplectic_defect(const qlmi_map* map, double* out) {
  return guarded([&] {
    need(map, "map");
    need(out, "out");
    *out = map->value.symplectic_defect();
  });
}

qlmi_status qlmi_map_apply(const qlmi_map* map, const qlmi_state* state, qlmi_state** out) {
  return guarded([&] {
    need(map, "map");
    need(state, "state");
    emit(out, qlmi::apply_map(state->value, map->value));
  });
}

qlmi_status qlmi_z_cs_d2(double detuning_mhz, char polarization, double* z, double* r, int* branch) {
  return guarded([&] {
    qlmi::require(polarization == 'x' || polarization == 'y', qlmi::ErrorCode::InvalidArgument,
                  "polarization must be 'x' or 'y'");
    const auto pol = polarization == 'x' ? qlmi::levels::DrivePolarization::X : qlmi::levels::DrivePolarization::Y;
    const auto res = qlmi::levels::z_from_scheme(qlmi::levels::cesium_d2_tables(detuning_mhz * 1e6, pol));
    if (z)
      *z = res.z;
    if (r)
      *r = res.r;
    if (branch)
      *branch = static_cast<int>(res.branch);
  });
}

qlmi_status qlmi_steady_state_epr(double z, double d, double gamma, double* epr_variance) {
  return guarded([&] {
    need(epr_variance, "epr_variance");
    qlmi::require(z > 1.0, qlmi::ErrorCode::InvalidArgument, "Z must exceed 1");
    const double mu = 0.5 * (z + 1.0 / z);
    const double nu = 0.5 * (z - 1.0 / z);
    const qlmi::dissipative::EnsembleModes modes;
    const auto s = qlmi::dissipative::steady_state(qlmi::dissipative::build_ideal_model(mu, nu, d, gamma, modes));
    *epr_variance = qlmi::epr_variance(s, modes.first.label, modes.second.label);
  });
}

qlmi_status qlmi_hybrid_epr(double n_bar, double kappa, double* per_sector, double* closed_form) {
  return guarded([&] {
    const auto r = qlmi::protocols::hybrid_epr_protocol(n_bar, kappa);
    if (per_sector)
      *per_sector = r.per_sector;
    if (closed_form)
      *closed_form = r.closed_form;
  });
}

qlmi_status qlmi_optimize_eta(double d, double a, double* eta_star, double* xi_min) {
  return guarded([&] {
    const auto r = qlmi::protocols::optimize_eta(d, a);
    if (eta_star)
      *eta_star = r.eta_star;
    if (xi_min)
      *xi_min = r.xi_min;
  });
}

qlmi_status qlmi_scenario_validate(const char* path, char** violations) {
  return guarded([&] {
    need(path, "path");
    need(violations, "violations");
    *violations = nullptr;
    std::string text;
    for (const auto& v : qlmi::scenario::validate_scenario(qlmi::scenario::parse_scenario(path)))
      text += v.field + ": " + v.message + "\n";
    *violations = copy_string(text);
    if (!text.empty()) {
      throw qlmi::Error(qlmi::ErrorCode::ValidationError, text);
    }
  });
}

qlmi_status qlmi_scenario_run(const char* path, const qlmi_run_options* options, int* physical, char** summary) {
  return guarded([&] {
    need(path, "path");
    need(options, "options");
    need(options->out_dir, "options->out_dir");
    qlmi::scenario::RunOptions opts;
    opts.out_dir = options->out_dir;
    if (options->has_seed)
      opts.seed = options->seed;
    opts.jobs = options->jobs == 0 ? 1 : options->jobs;
    if (options->format) {
      opts.format = qlmi::scenario::format_from_string(options->format);
      qlmi::require(opts.format.has_value(), qlmi::ErrorCode::InvalidArgument,
                    std::string("unknown format '") + options->format + "'");
    }
    const auto report = qlmi::scenario::run_scenario(qlmi::scenario::parse_scenario(path), opts);
    if (physical)
      *physical = report.physical ? 1 : 0;
    if (summary)
      *summary = copy_string(qlmi::scenario::summarize(report));
  });
}

qlmi_status qlmi_scenario_list(const char* dir, char** listing) {
  return guarded([&] {
    need(listing, "listing");
    const auto root = dir ? std::filesystem::path(dir) : qlmi::scenario::default_scenario_dir();
    std::string text;
    for (const auto& s : qlmi::scenario::list_scenarios(root))
      text += s.id + "\t" + s.kind + "\t" + s.anchor + "\n";
    *listing = copy_string(text);
  });
}

}  // extern "C"
