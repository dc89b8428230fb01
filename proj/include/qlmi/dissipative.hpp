#pragma once

// Gaussian Lindblad dynamics of two oppositely polarized ensembles.
//
// Each jump operator is linear in the quadratures, L = c·r. With
// M = Σ γ c c^H the moments obey
//   d⟨r⟩/dt = A⟨r⟩,   dΣ/dt = AΣ + ΣAᵀ + D,
//   A = −Ω Im M,      D = Ω Re M Ωᵀ.
// Ensemble II is polarized along −x, so its Holstein–Primakoff lowering
// operator is a creation operator: J⁻_II ∝ a_II†.

#include "qlmi/gaussian.hpp"

#include <complex>

namespace qlmi::dissipative {

using CVector = Eigen::VectorXcd;

struct JumpOperators {
  CVector a;  // μ a_I − ν a_II†
  CVector b;  // μ a_II − ν a_I†
};

/// Coefficient vectors over (x_I, p_I, x_II, p_II). Throws InvalidArgument
/// unless μ² − ν² = 1 to 1e-9.
JumpOperators jump_operators(double mu, double nu);
/// The same vectors without the normalization check, e.g. for the μ=ν surrogate.
JumpOperators jump_operators_unchecked(double mu, double nu);

struct LindbladModel {
  std::vector<ModeId> modes;
  std::vector<CVector> jumps;  // each of length 2·modes.size()
  std::vector<double> rates;   // Lindblad rates, ρ̇ = Σ rate·𝒟[L]ρ
  Matrix drift;
  Matrix diffusion;

  std::size_t dimension() const { return 2 * modes.size(); }
  /// max |drift/diffusion − rebuilt from jumps|.
  double rebuild_defect() const;
};

LindbladModel make_model(std::vector<ModeId> modes, std::vector<CVector> jumps,
                         std::vector<double> rates);

struct EnsembleModes {
  ModeId first{"A_I", ModeKind::Atomic};
  ModeId second{"A_II", ModeKind::Atomic};
};

/// The A and B channels, each at Lindblad rate dΓ (the master equation's
/// d(Γ/2)(…+H.c.)). Amplitudes then relax at dΓ/2, which equals γs.
LindbladModel build_ideal_model(double mu, double nu, double d, double gamma,
                                const EnsembleModes& modes = {});

enum class NoiseKind {
  SingleAtomDecay,  // 𝒟[a_k]
  Pump,             // 𝒟[a_k] + pump_excess·𝒟[a_k†]
  Repump,           // 𝒟[a_k] + repump_excess·𝒟[a_k†]
  Dephasing,        // 𝒟[x_k] + 𝒟[p_k]
};

const char* to_string(NoiseKind kind) noexcept;
/// Accepts single_atom_decay, pump, repump, dephasing.
NoiseKind noise_kind_from_string(std::string_view name);

inline constexpr double kPumpExcess = 0.1;
inline constexpr double kRepumpExcess = 0.5;

/// Appends the local channel on every mode of the model. rate = 0 leaves the
/// model unchanged; rate < 0 throws InvalidArgument.
LindbladModel add_noise_channel(const LindbladModel& model, NoiseKind kind, double rate);

/// Moments after time t; modes of `state` outside the model are untouched.
GaussianState evolve(const LindbladModel& model, const GaussianState& state, double t);

/// Solves AΣ + ΣAᵀ + D = 0 by a complex Schur (Bartels–Stewart) reduction.
/// Throws NoUniqueSteadyState when the drift is not Hurwitz.
Matrix solve_lyapunov(const Matrix& a, const Matrix& d);

GaussianState steady_state(const LindbladModel& model);

struct SpectralReport {
  bool unique = false;
  std::vector<std::complex<double>> eigenvalues;  // of the drift, by real part
  double max_real_part = 0.0;
};

SpectralReport is_unique(const LindbladModel& model);

/// ⟨L†L⟩ for L = c·r over the listed modes of `state`.
double jump_occupation(const GaussianState& state, const std::vector<ModeId>& modes, const CVector& c);

struct EntanglementReport {
  double epr_variance = 0.0;
  bool entangled = false;  // epr_variance < 1
};

EntanglementReport entanglement_report(const GaussianState& state, std::string_view a,
                                       std::string_view b);

}  // namespace qlmi::dissipative
