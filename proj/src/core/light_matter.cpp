#include "qlmi/light_matter.hpp"

#include "qlmi/constants.hpp"
#include "qlmi/error.hpp"

#include <cmath>

namespace qlmi::maps {

namespace {

void require_z(double z) {
  require(std::isfinite(z) && z > 0.0, ErrorCode::InvalidArgument, "Z must be positive");
}

// Per-sector block of the imbalanced two-cell relations, order (x_A,p_A,x_±,p_±).
Matrix sector_block(double z, double e, double s) {
  Matrix m(4, 4);
  m << e, 0, 0, s * z,
       0, e, -s / z, 0,
       0, s * z, e, 0,
       -s / z, 0, 0, e;
  return m;
}

Matrix two_sector(const Matrix& block) {
  Matrix m = Matrix::Zero(8, 8);
  m.topLeftCorner(4, 4) = block;
  m.bottomRightCorner(4, 4) = block;
  return m;
}

}  // namespace

CouplingParams coupling_params(double z, double gamma_s, double duration) {
  InteractionParams p{z, gamma_s, duration, 0.0};
  p.validate();
  return {p.mu(), p.nu(), p.kappa()};
}

double kappa_finite(double z, double swap_time) {
  require_z(z);
  require(swap_time >= 0.0, ErrorCode::InvalidArgument, "γs·T must be non-negative");
  return std::sqrt(-std::expm1(-2.0 * swap_time)) * z;
}

double kappa_qnd(double z, double swap_time) {
  require_z(z);
  require(swap_time >= 0.0, ErrorCode::InvalidArgument, "γs·T must be non-negative");
  return std::sqrt(2.0 * swap_time) * z;
}

double swap_time_for_kappa(double z, double kappa) {
  require_z(z);
  require(kappa >= 0.0 && kappa < z, ErrorCode::InvalidArgument,
          "κ must lie in [0, Z) for a finite pulse");
  const double ratio = kappa / z;
  return -0.5 * std::log1p(-ratio * ratio);
}

double InteractionParams::mu() const { return 0.5 * (z + 1.0 / z); }
double InteractionParams::nu() const { return 0.5 * (z - 1.0 / z); }
double InteractionParams::kappa() const { return kappa_finite(z, swap_time()); }

void InteractionParams::validate() const {
  require_z(z);
  require(std::isfinite(gamma_s) && gamma_s >= 0.0, ErrorCode::InvalidArgument,
          "gamma_s must be non-negative");
  require(std::isfinite(duration) && duration > 0.0, ErrorCode::InvalidArgument,
          "pulse duration T must be positive");
  require(std::isfinite(omega), ErrorCode::InvalidArgument, "Larmor frequency must be finite");
}

bool InteractionParams::larmor_regime_ok() const {
  return std::abs(omega) * duration >= constants::kMinLarmorCycles;
}

// ---------------------------------------------------------------------------

SymplecticMap qnd_single_pass(double kappa, const ModeId& atomic, const ModeId& light) {
  require(std::isfinite(kappa) && kappa >= 0.0, ErrorCode::InvalidArgument, "κ must be non-negative");
  Matrix m = Matrix::Identity(4, 4);
  m(0, 3) = kappa;  // x_A += κ p_L
  m(2, 1) = kappa;  // x_L += κ p_A
  return SymplecticMap(std::move(m), {atomic, light});
}

SymplecticMap qnd_two_cell(double kappa, const TwoCellModes& modes) {
  const auto single = qnd_single_pass(kappa, modes.atom_cos, modes.light_cos);
  return SymplecticMap(two_sector(single.matrix()),
                       {modes.atom_cos, modes.light_cos, modes.atom_sin, modes.light_sin});
}

SymplecticMap nonqnd_two_cell(const InteractionParams& params, const ReadingModes& modes) {
  params.validate();
  const double e = std::exp(-params.swap_time());
  const double s = std::sqrt(-std::expm1(-2.0 * params.swap_time()));
  return SymplecticMap(two_sector(sector_block(params.z, e, s)), Vector::Zero(8),
                       {modes.atom_cos, modes.rising_cos, modes.atom_sin, modes.rising_sin},
                       {modes.atom_cos, modes.falling_cos, modes.atom_sin, modes.falling_sin});
}

SymplecticMap long_time_limit(double z, const ReadingModes& modes) {
  require_z(z);
  return SymplecticMap(two_sector(sector_block(z, 0.0, 1.0)), Vector::Zero(8),
                       {modes.atom_cos, modes.rising_cos, modes.atom_sin, modes.rising_sin},
                       {modes.atom_cos, modes.falling_cos, modes.atom_sin, modes.falling_sin});
}

SymplecticMap reading_mode_combination(double z, const ModeId& upper, const ModeId& lower,
                                       const ModeId& reading, const ModeId& complement) {
  require_z(z);
  const double mu = 0.5 * (z + 1.0 / z);
  const double nu = 0.5 * (z - 1.0 / z);
  Matrix m(4, 4);
  // rows x_r, p_r, x_c, p_c; columns x_us, p_us, x_ls, p_ls
  m << mu, 0, 0, nu,
       0, mu, nu, 0,
       0, nu, mu, 0,
       nu, 0, 0, mu;
  return SymplecticMap(std::move(m), Vector::Zero(4), {upper, lower}, {reading, complement});
}

SymplecticMap nonqnd_single_cell_reading(const InteractionParams& params, const ModeId& atom,
                                         const ModeId& reading) {
  params.validate();
  const double e = std::exp(-params.swap_time());
  const double s = std::sqrt(-std::expm1(-2.0 * params.swap_time()));
  Matrix m = Matrix::Zero(4, 4);
  for (int q = 0; q < 2; ++q) {
    m(q, q) = e;
    m(q, 2 + q) = s;
    m(2 + q, 2 + q) = e;
    m(2 + q, q) = -s;
  }
  return SymplecticMap(std::move(m), {atom, reading});
}

SymplecticMap nonqnd_single_cell(const InteractionParams& params, const SidebandModes& modes) {
  params.validate();
  const auto to_reading =
      reading_mode_combination(params.z, modes.upper_in, modes.lower_in, modes.reading, modes.complement);
  const auto exchange = nonqnd_single_cell_reading(params, modes.atom, modes.reading);
  // The falling reading mode is built from the outgoing sidebands by the same
  // combination, so the outgoing sidebands are its inverse.
  const auto to_sidebands_out =
      reading_mode_combination(params.z, modes.upper_out, modes.lower_out, modes.reading, modes.complement);

  Matrix t = Matrix::Identity(6, 6);
  t.bottomRightCorner(4, 4) = to_reading.matrix();
  Matrix x = Matrix::Identity(6, 6);
  x.topLeftCorner(4, 4) = exchange.matrix();
  Matrix u = Matrix::Identity(6, 6);
  // S⁻¹ = −Ω Sᵀ Ω
  const Matrix w = symplectic_form(2);
  u.bottomRightCorner(4, 4) = -w * to_sidebands_out.matrix().transpose() * w;

  return SymplecticMap(u * x * t, Vector::Zero(6), {modes.atom, modes.upper_in, modes.lower_in},
                       {modes.atom, modes.upper_out, modes.lower_out});
}

// ---------------------------------------------------------------------------

double mode_function(const ModeFunctionSpec& spec, double t) {
  require(spec.duration > 0.0, ErrorCode::InvalidArgument, "mode function: T must be positive");
  require(t >= 0.0 && t <= spec.duration, ErrorCode::InvalidArgument,
          "mode function: t outside [0, T]");
  const double gt = spec.rate * spec.duration;
  switch (spec.kind) {
    case EnvelopeKind::Flat:
      return 1.0;
    case EnvelopeKind::CosModulated:
      return std::sqrt(2.0) * std::cos(spec.omega * t);
    case EnvelopeKind::SinModulated:
      return std::sqrt(2.0) * std::sin(spec.omega * t);
    case EnvelopeKind::ExpRising:
    case EnvelopeKind::ExpFalling: {
      require(spec.rate >= 0.0, ErrorCode::InvalidArgument, "mode function: negative rate");
      if (gt == 0.0)
        return 1.0;
      if (spec.kind == EnvelopeKind::ExpRising)
        return std::sqrt(2.0 * gt / std::expm1(2.0 * gt)) * std::exp(spec.rate * t);
      return std::sqrt(2.0 * gt / -std::expm1(-2.0 * gt)) * std::exp(-spec.rate * t);
    }
  }
  return 0.0;
}

double reading_mode_norm(EnvelopeKind kind, double kappa, double z) {
  require_z(z);
  const double x = kappa * kappa / (z * z);
  switch (kind) {
    case EnvelopeKind::ExpRising: return std::sqrt(std::expm1(x));
    case EnvelopeKind::ExpFalling: return std::sqrt(-std::expm1(-x));
    default: fail(ErrorCode::InvalidArgument, "reading_mode_norm: only exponential kinds have N±");
  }
}

}  // namespace qlmi::maps
