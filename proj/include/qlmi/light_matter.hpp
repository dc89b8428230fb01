#pragma once

// Pulse-level input-output maps of the Faraday light–atom interaction.
//
// The interaction H = √(2γs)(μ H_P − ν H_A), μ=(Z+1/Z)/2, ν=(Z−1/Z)/2, mixes a
// beamsplitter part H_P and a two-mode-squeezing part H_A. Z→∞ at fixed
// κ = √(2γs T)·Z is the QND limit H = κ p_A p_L.

#include "qlmi/gaussian.hpp"

namespace qlmi::maps {

struct CouplingParams {
  double mu;
  double nu;
  double kappa;
};

/// μ, ν and κ = √(1-e^{-2γs T})·Z. Throws for Z ≤ 0, γs < 0 or T ≤ 0.
CouplingParams coupling_params(double z, double gamma_s, double duration);

/// κ of a finite pulse, √(1-e^{-2γs T})·Z.
double kappa_finite(double z, double swap_time);
/// κ of the QND continuum limit, √(2γs T)·Z. Agrees with kappa_finite to
/// relative order γs T.
double kappa_qnd(double z, double swap_time);
/// γs T at which kappa_finite(z, γs T) == kappa; requires kappa < z.
double swap_time_for_kappa(double z, double kappa);

struct InteractionParams {
  double z = 1.0;
  double gamma_s = 0.0;  // 1/s
  double duration = 1.0;  // T, s
  double omega = 0.0;     // Larmor frequency, rad/s

  double mu() const;
  double nu() const;
  double kappa() const;
  double swap_time() const { return gamma_s * duration; }
  /// Throws InvalidArgument when Z ≤ 0, γs < 0 or T ≤ 0.
  void validate() const;
  /// False when Ω·T < 50: sin/cos modulated modes are then not independent.
  bool larmor_regime_ok() const;
};

// ---------------------------------------------------------------------------
// QND maps

/// x_A' = x_A + κ p_L, x_L' = x_L + κ p_A, p's conserved. Map order (A, L).
SymplecticMap qnd_single_pass(double kappa, const ModeId& atomic, const ModeId& light);

struct TwoCellModes {
  ModeId atom_cos{"A_cos", ModeKind::Atomic};
  ModeId atom_sin{"A_sin", ModeKind::Atomic};
  ModeId light_cos{"L_cos", ModeKind::LightCos};
  ModeId light_sin{"L_sin", ModeKind::LightSin};
};

/// Two antiparallel cells: the single-pass QND relations, independently on the
/// cos and sin EPR sectors. Map order (A_cos, L_cos, A_sin, L_sin).
SymplecticMap qnd_two_cell(double kappa, const TwoCellModes& modes = {});

// ---------------------------------------------------------------------------
// Imbalanced (non-QND) maps

struct ReadingModes {
  ModeId atom_cos{"A_cos", ModeKind::Atomic};
  ModeId atom_sin{"A_sin", ModeKind::Atomic};
  ModeId rising_cos{"R+_cos", ModeKind::ReadingMode};   // input reading mode
  ModeId rising_sin{"R+_sin", ModeKind::ReadingMode};
  ModeId falling_cos{"R-_cos", ModeKind::ReadingMode};  // output reading mode
  ModeId falling_sin{"R-_sin", ModeKind::ReadingMode};
};

/// Two-cell relations per sector (e = e^{-γs T}, s = √(1-e²)):
///   x_A' = e x_A + sZ p_+,   p_A' = e p_A − (s/Z) x_+,
///   x_-' = e x_+ + sZ p_A,   p_-' = e p_+ − (s/Z) x_A.
/// Inputs (A_cos, R+_cos, A_sin, R+_sin), outputs (A_cos, R-_cos, A_sin, R-_sin).
SymplecticMap nonqnd_two_cell(const InteractionParams& params, const ReadingModes& modes = {});

/// γs T → ∞ limit: x_-'=Z p_A, p_-'=-x_A/Z, x_A'=Z p_+, p_A'=-x_+/Z. Same
/// mode layout as nonqnd_two_cell.
SymplecticMap long_time_limit(double z, const ReadingModes& modes = {});

struct SidebandModes {
  ModeId atom{"A", ModeKind::Atomic};
  ModeId upper_in{"us+", ModeKind::LightSidebandUpper};
  ModeId lower_in{"ls+", ModeKind::LightSidebandLower};
  ModeId upper_out{"us-", ModeKind::LightSidebandUpper};
  ModeId lower_out{"ls-", ModeKind::LightSidebandLower};
  ModeId reading{"R", ModeKind::ReadingMode};
  ModeId complement{"Rc", ModeKind::ReadingMode};
};

/// Sideband pair → reading mode and its complement:
///   x_r = μ x_us + ν p_ls,  p_r = μ p_us + ν x_ls,
///   x_c = μ x_ls + ν p_us,  p_c = μ p_ls + ν x_us.
/// Inputs (upper, lower), outputs (reading, complement).
SymplecticMap reading_mode_combination(double z, const ModeId& upper, const ModeId& lower,
                                       const ModeId& reading, const ModeId& complement);

/// Single cell in a magnetic field, zero-order reading-mode closure. The atom
/// exchanges with the rising reading mode as a beamsplitter,
///   (x_A,p_A)' = e (x_A,p_A) + s (x_r,p_r),  (x_r,p_r)' = e (x_r,p_r) − s (x_A,p_A),
/// while the complement passes as a spectator. Inputs (A, us+, ls+), outputs
/// (A, us-, ls-).
SymplecticMap nonqnd_single_cell(const InteractionParams& params, const SidebandModes& modes = {});

/// The atom/reading-mode beamsplitter alone. Inputs (A, R), outputs (A, R).
SymplecticMap nonqnd_single_cell_reading(const InteractionParams& params, const ModeId& atom,
                                         const ModeId& reading);

// ---------------------------------------------------------------------------
// Temporal mode functions

enum class EnvelopeKind { Flat, CosModulated, SinModulated, ExpRising, ExpFalling };

struct ModeFunctionSpec {
  EnvelopeKind kind = EnvelopeKind::Flat;
  double rate = 0.0;      // γs for the exponential kinds, 1/s
  double duration = 1.0;  // T, s
  double omega = 0.0;     // Larmor frequency for the modulated kinds, rad/s
};

/// Envelope f(t) normalized so that (1/T)∫₀ᵀ f² dt = 1 (exactly for flat and
/// exponential kinds; up to O(1/ΩT) for the modulated kinds).
double mode_function(const ModeFunctionSpec& spec, double t);

/// N₊ = √(e^{κ²/Z²}-1) (rising) or N₋ = √(1-e^{-κ²/Z²}) (falling), with
/// κ²/Z² = 2γs T.
double reading_mode_norm(EnvelopeKind kind, double kappa, double z);

}  // namespace qlmi::maps
