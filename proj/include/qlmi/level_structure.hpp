#pragma once

// Interaction asymmetry Z from the atomic level structure.
//
// The effective |a⟩→|b⟩ Raman rate through excited levels l is
//   Γ_{a→b} = Ω_R² |Σ_l c_al c_lb √γ_l / Δ_l|²,
// and r² = Γ_{↓→↑}/Γ_{↑→↓} = μ²/ν² gives Z² = (r+1)/(r-1).

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

namespace qlmi::levels {

// ---------------------------------------------------------------------------
// Angular momentum coupling (exact rational Racah sums, then one square root)

/// ⟨j1 m1; j2 m2 | J M⟩ (Condon–Shortley). Zero when M ≠ m1+m2 or a triangle
/// or projection condition fails. Throws for non-half-integer arguments.
double clebsch_gordan(double j1, double m1, double j2, double m2, double j, double m);

double wigner_3j(double j1, double j2, double j3, double m1, double m2, double m3);
double wigner_6j(double j1, double j2, double j3, double j4, double j5, double j6);

/// Relative hyperfine line strength S_FF' = (2F'+1)(2J+1){J J' 1; F' F I}².
/// Σ_F' S_FF' = 1 for every F.
double hyperfine_strength(double j, double jp, double nuclear_spin, double f, double fp);

/// ⟨F m| d_q |F' m'⟩ / ⟨J‖d‖J'⟩ for a hyperfine manifold.
double hyperfine_dipole(double j, double jp, double nuclear_spin, double f, double m, double fp,
                        double mp, int q);

// ---------------------------------------------------------------------------
// Level schemes

struct GroundLevel {
  std::string name;
  double f = 0.0;
  double m = 0.0;
};

struct ExcitedLevel {
  std::string name;
  double f = 0.0;
  double m = 0.0;
  double detuning = 0.0;   // Δ_l = ω_laser − ω_l, rad/s (Δ>0: blue)
  double linewidth = 0.0;  // γ_l, rad/s
};

/// One two-photon path from → via → to. c_in drives from→via (classical
/// field), c_out emits via→to (quantum field).
struct DipolePath {
  std::string from;
  std::string via;
  std::string to;
  std::complex<double> c_in;
  std::complex<double> c_out;
};

struct LevelScheme {
  std::vector<GroundLevel> ground;
  std::vector<ExcitedLevel> excited;
  std::vector<DipolePath> paths;
  double rabi_frequency = 1.0;  // Ω_R, rad/s
  std::string up = "up";        // |↑⟩, the polarized state
  std::string down = "down";    // |↓⟩

  const ExcitedLevel& excited_level(const std::string& name) const;
};

struct SchemeDiagnostics {
  bool coefficients_bounded = true;    // all |c| ≤ 1
  bool far_detuned = true;             // |Δ_l|/γ_l ≥ 10 for every used level
  double min_detuning_over_width = 0.0;
};

/// Structural validation (names resolve, rates finite); throws ValidationError.
void validate(const LevelScheme& scheme);
SchemeDiagnostics diagnose(const LevelScheme& scheme);

/// Coherent sum over the excited levels connecting from→to, squared.
/// Throws InvalidArgument when no path connects the two levels.
double path_rate(const LevelScheme& scheme, const std::string& from, const std::string& to);

enum class Branch {
  PassiveDominated,  // r > 1, Z > 1
  ActiveDominated,   // r < 1, reported as Z < 1
  Degenerate,        // r = 1: balanced, QND-like, Z = ∞
};

const char* to_string(Branch branch) noexcept;

struct BranchingResult {
  double gamma_up_down = 0.0;
  double gamma_down_up = 0.0;
  double r = 0.0;
  double z = 0.0;
  double mu = 0.0;
  double nu = 0.0;
  Branch branch = Branch::PassiveDominated;
};

/// For r < 1 the roles of passive and active parts exchange; Z is reported on
/// the Z<1 branch, Z = √((1−r)/(1+r)), with branch = ActiveDominated.
BranchingResult z_from_scheme(const LevelScheme& scheme);

// ---------------------------------------------------------------------------
// Alkali D-line tables

enum class DrivePolarization {
  Y,  // classical field ⊥ quantization axis (σ±), quantum field π
  X,  // classical field π, quantum field σ±
};

struct HyperfineManifold {
  std::string atom;
  double nuclear_spin = 0.0;
  double ground_j = 0.5;
  double ground_f = 0.0;
  double excited_j = 1.5;
  double linewidth = 0.0;  // rad/s
  /// (F', energy relative to the reference level in rad/s)
  std::vector<std::pair<double, double>> excited_levels;
  double reference_f = 0.0;
  double up_m = 0.0;
  double down_m = 0.0;
};

struct ProbeSettings {
  double detuning = 0.0;  // rad/s relative to the reference excited level, >0 blue
  DrivePolarization polarization = DrivePolarization::Y;
  double rabi_frequency = 1.0;
};

/// Builds the two-level encoding |↑⟩=|F,up_m⟩, |↓⟩=|F,down_m⟩ and every
/// Raman path through the excited manifold for the given drive.
LevelScheme build_scheme(const HyperfineManifold& manifold, const ProbeSettings& probe);

struct LevelSchemeFile {
  HyperfineManifold manifold;
  ProbeSettings probe;
};

/// Reads the manifold description (YAML). Frequencies in the file are MHz.
LevelSchemeFile load_manifold_file(const std::filesystem::path& path);

/// Path of the shipped Cs D2 description.
std::filesystem::path default_cesium_d2_file();

/// Cs D2: F=4, m_F∈{4,3} ≡ {|↑⟩,|↓⟩}, excited F'∈{2..5} of 6P3/2 at the
/// shipped hyperfine offsets; `detuning_hz` is measured from F'=5.
LevelScheme cesium_d2_tables(double detuning_hz = 850e6,
                             DrivePolarization polarization = DrivePolarization::Y);

/// Explicit level-scheme tree (ground/excited/paths), the form save() writes.
LevelScheme load_level_scheme(const std::filesystem::path& path);
void save_level_scheme(const LevelScheme& scheme, const std::filesystem::path& path);

}  // namespace qlmi::levels
