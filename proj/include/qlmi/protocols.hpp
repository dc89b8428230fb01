#pragma once

// End-to-end pipelines: quantum memory with feedback, RF magnetometry,
// measurement-induced spin squeezing, the hybrid atom–mechanics interface and
// the dissipative entanglement time course.

#include "qlmi/dissipative.hpp"
#include "qlmi/gaussian.hpp"
#include "qlmi/light_matter.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace qlmi::protocols {

// ---------------------------------------------------------------------------
// EPR bases

/// (x_I, p_I, x_II, p_II) → (cos, sin) sectors of two oppositely precessing
/// ensembles: x_cos=(x_I+x_II)/√2, p_cos=(p_I+p_II)/√2, x_sin=−(p_I−p_II)/√2,
/// p_sin=(x_I−x_II)/√2. Then var(p_cos)+var(p_sin) is the EPR variance.
SymplecticMap ensemble_epr_basis(const ModeId& first, const ModeId& second, const ModeId& cos,
                                 const ModeId& sin);

/// (atom, mechanics) → hybrid sectors with a negative-mass atomic oscillator:
/// x_cos=(x_A+p_m)/√2, p_cos=(p_A−x_m)/√2, x_sin=(x_A−p_m)/√2, p_sin=(p_A+x_m)/√2.
SymplecticMap hybrid_epr_basis(const ModeId& atom, const ModeId& mechanics, const ModeId& cos,
                               const ModeId& sin);

// ---------------------------------------------------------------------------
// Quantum memory

struct InputStateSpec {
  double x = 0.0;            // mean of x
  double p = 0.0;            // mean of p
  double squeezing_db = 0.0;  // ≥ 0; 10·log10(vacuum / squeezed variance)
  double squeezing_phase = 0.0;
};

struct MemoryConfig {
  maps::InteractionParams interaction{2.5, 0.0, 1.0, 0.0};
  double gain = 1.0;              // normalized; 1 cancels the atomic p_A in P_fin
  double presqueeze_kappa = 0.0;  // strength of an optional conditioning probe on x_A
  double displacement_max = 3.8;
  int grid_points = 9;            // per displacement axis
  double squeezing_db = 6.0;
  std::vector<double> squeezing_phases{0.0, 1.5707963267948966};
  std::optional<double> classical_benchmark;

  void validate() const;
  /// Pulse with κ = kappa at the configured Z (γs T from κ = √(1−e^{−2γsT})·Z).
  static MemoryConfig with_kappa(double z, double kappa, double gain = 1.0);
};

struct MemoryModes {
  maps::ReadingModes light;
};

/// Two-cell non-QND pulse, homodyne of x of each outgoing reading mode, then
/// feedback p_A ← p_A − (g e/κ)·outcome, e = e^{−γs T}. The joint input must
/// hold A_cos, A_sin, R+_cos, R+_sin. Returns the final atomic state,
/// averaged over measurement outcomes.
GaussianState memory_store_joint(const MemoryConfig& config, const GaussianState& joint);

/// Vacuum atoms A_cos, A_sin, x-squeezed by the optional pre-probe.
GaussianState memory_initial_atoms(const MemoryConfig& config);

/// Atoms start in the vacuum (optionally pre-squeezed in x); `input_light`
/// holds one mode (cos sector, sin sector vacuum) or two (cos, sin).
/// The returned atomic state has matching modes A_cos[, A_sin].
GaussianState memory_store(const MemoryConfig& config, const GaussianState& input_light);

/// Ideal storage target: the input rotated by a quarter period,
/// (x, p) → (p, −x), relabeled onto the atomic modes.
GaussianState memory_target(const GaussianState& input_light);

GaussianState make_input_state(const InputStateSpec& spec, const ModeId& mode);
std::vector<InputStateSpec> memory_input_set(const MemoryConfig& config);

struct MemoryFidelityReport {
  double mean_fidelity = 0.0;
  double min_fidelity = 0.0;
  std::size_t num_inputs = 0;
  std::optional<bool> beats_benchmark;
};

/// `channel` maps an input light mode state to the stored atomic state.
MemoryFidelityReport memory_fidelity_report(
    const MemoryConfig& config, const std::vector<InputStateSpec>& inputs,
    const std::function<GaussianState(const GaussianState&)>& channel);
MemoryFidelityReport memory_fidelity_report(const MemoryConfig& config,
                                            const std::vector<InputStateSpec>& inputs);

// ---------------------------------------------------------------------------
// Magnetometry

struct MagnetometryConfig {
  double n_atoms = 1.5e12;
  double b_rf = 0.0;                  // T
  double tau = 22e-3;                 // s
  double t2 = 30e-3;                  // s
  double omega = 2.0 * 3.14159265358979323846 * 322e3;  // rad/s
  double gyromagnetic = 2.0 * 3.14159265358979323846 * 3.5e9;  // rad/(s·T), Cs F=4
  double probe_kappa = 1.0;
  double calibration = 0.5;           // RF-to-rotation geometry factor
  double technical_noise = 0.0;       // additive variance, spin units²

  double spin_length() const { return 4.0 * n_atoms; }
  void validate() const;
  /// τ ≤ 5·T2.
  bool duration_advisory_ok() const { return tau <= 5.0 * t2; }
};

struct MagnetometryResult {
  double mean_displacement = 0.0;  // ⟨J_z⟩ after τ, spin units
  double pn_variance = 0.0;        // 2 N_A
  double noise_variance = 0.0;     // PN(1 + 1/κ²) + technical
  double snr = 0.0;                // mean / √noise
  double sensitivity = 0.0;        // T/√Hz, B at SNR = 1 times √τ
};

MagnetometryResult magnetometry_run(const MagnetometryConfig& config);

struct SnrPoint {
  double tau = 0.0;
  double snr_css = 0.0;
  double snr_entangled = 0.0;
  double ratio = 0.0;
};

/// Conditioning probe (QND + homodyne) on the readout quadrature, decay of the
/// atomic mode at 1/T2 + `extra_decoherence` over τ, then readout. The RF
/// signal is common to both arms; the ratio compares the readout noise.
std::vector<SnrPoint> entanglement_assisted_snr(const MagnetometryConfig& config, double pre_probe_kappa,
                                                const std::vector<double>& taus,
                                                double extra_decoherence = 0.0);

// ---------------------------------------------------------------------------
// Spin squeezing

struct SqueezingBudget {
  double d = 100.0;
  double eta = 0.0;
  double a = 0.0;
  double n_atoms = 1e6;

  void validate() const;
};

/// ξ = (1/(1+dη) + aη)/(1−η)².
double spin_squeezing_xi(const SqueezingBudget& budget);

struct EtaOptimum {
  double eta_star = 0.0;
  double xi_min = 0.0;
};

/// Golden-section minimization of ξ over η ∈ [0, 1). Throws InvalidArgument
/// when the minimum sits at η = 0 (d ≤ 2 + a).
EtaOptimum optimize_eta(double d, double a);

struct HeisenbergRow {
  double n_atoms = 0.0;
  double d = 0.0;
  double eta_star = 0.0;
  double xi_min = 0.0;
  double xi_times_n = 0.0;
  double angular_precision = 0.0;  // δJ_z/J = √(ξ/N)
  double css_precision = 0.0;      // 1/√N
};

struct HeisenbergScan {
  std::vector<HeisenbergRow> rows;
  double precision_slope = 0.0;  // log-log, δJ_z/J against N
  double css_slope = 0.0;
  double xi_slope = 0.0;
  /// ξ ∝ 1/√N would give −1/2; the a=0 budget with d ∝ N gives −1.
  double sqrt_claim_xi_slope = -0.5;
  double xi_slope_discrepancy = 0.0;  // xi_slope − sqrt_claim_xi_slope
};

HeisenbergScan heisenberg_scan(const std::function<double(double)>& d_of_n, const std::vector<double>& n_values,
                               double a = 0.0);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Optomechanics

struct OptomechParams {
  double k = 0.0;            // 1/m
  double mass = 0.0;         // kg
  double omega_m = 0.0;      // rad/s
  double finesse = 0.0;
  double n_photons = 0.0;
  double q_factor = 0.0;
  double temperature = 0.0;  // K

  double x_zpf() const;
  double n_bar() const;
  double mechanical_linewidth() const { return omega_m / q_factor; }
  void validate() const;

  /// 1064 nm light, 1 pg membrane at 1 MHz, finesse 1000, 8.6e8 photons
  /// (κ_OM ≈ 1), Q = 1e6, 0.48 mK (n̄ ≈ 10).
  static OptomechParams preset();
};

/// κ_OM = 2k·x_ZPF·√N_ph·F.
double optomech_kappa(const OptomechParams& params);

struct HybridResult {
  double closed_form = 0.0;  // [1/(1+n̄) + 2κ²]^{-1}
  double per_sector = 0.0;   // each sector conditioned on its own homodyne
  double joint = 0.0;        // both sectors conditioned on both outcomes
  bool entangled = false;    // per_sector < 1
};

/// Thermal mechanics (n̄) and atomic vacuum, hybrid EPR basis, two-sector QND
/// with light coupled to both systems (√2κ per sector), homodyne of x of both
/// outgoing light modes. Reports var(p_cos)+var(p_sin).
HybridResult hybrid_epr_protocol(double n_bar, double kappa);
HybridResult hybrid_epr_protocol(const OptomechParams& params, double kappa);

// ---------------------------------------------------------------------------
// Dissipative entanglement time course

struct TimecourseConfig {
  double z = 2.5;
  double optical_depth = 30.0;
  double gamma = 1.0;             // single-atom rate; time unit is 1/(dΓ) at full depth
  double decay_rate = 0.5;        // local single-atom decay
  double loss_rate = 0.05;        // population loss out of the encoding
  double pump_rate = 0.0;         // local pump channel (with its noise)
  double repump_rate = 0.0;       // population return; also a local noise channel
  double duration = 200.0;
  int steps = 400;
  double probe_kappa = 1.0;       // conditioning probe for the comparison

  void validate() const;
};

struct TimecoursePoint {
  double t = 0.0;
  double population = 0.0;
  double epr_variance = 0.0;
  bool entangled = false;
};

struct TimecourseResult {
  std::vector<TimecoursePoint> points;
  std::optional<double> entanglement_lost_at;
  double final_unconditioned = 0.0;
  double final_conditioned = 0.0;
};

/// Piecewise-constant stepping: the optical depth follows the population
/// P(t), dP/dt = −loss·P + repump·(1−P); each step evolves under the ideal
/// channels at d·P plus the local noise. The final state is also conditioned
/// on a QND probe of both EPR quadratures.
TimecourseResult dissipative_timecourse(const TimecourseConfig& config);

/// EPR variance of the two ensembles after a QND probe of strength κ on both
/// EPR quadratures and homodyne detection of the light.
double conditioned_epr_variance(const GaussianState& ensembles, const ModeId& first, const ModeId& second,
                                double kappa);

}  // namespace qlmi::protocols
