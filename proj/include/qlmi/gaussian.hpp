#pragma once

// Gaussian-state algebra over labeled bosonic modes.
//
// Every vector and matrix is ordered interleaved, (x1,p1,...,xn,pn), following
// the order of `GaussianState::modes()`. Covariances are symmetrized second
// moments cov_ij = ⟨{Δr_i,Δr_j}⟩/2, so the vacuum is I/2.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qlmi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

enum class ModeKind {
  Atomic,
  LightSin,
  LightCos,
  LightSidebandUpper,
  LightSidebandLower,
  Mechanical,
  ReadingMode,
};

const char* to_string(ModeKind kind) noexcept;

struct ModeId {
  std::string label;
  ModeKind kind = ModeKind::Atomic;

  bool operator==(const ModeId&) const = default;
};

enum class Quadrature { X, P };

/// Standard symplectic form Ω_n = ⊕ [[0,1],[-1,0]].
Matrix symplectic_form(std::size_t num_modes);

class GaussianState {
public:
  /// Validates dimensions, label uniqueness and symmetry of `cov`. Physicality
  /// is not enforced here; see check_physical().
  GaussianState(std::vector<ModeId> modes, Vector mean, Matrix cov);

  const std::vector<ModeId>& modes() const noexcept { return modes_; }
  const Vector& mean() const noexcept { return mean_; }
  const Matrix& cov() const noexcept { return cov_; }
  std::size_t num_modes() const noexcept { return modes_.size(); }

  bool has_mode(std::string_view label) const noexcept;
  /// Position of `label` in modes(); throws ModeMismatch when absent.
  std::size_t index_of(std::string_view label) const;
  /// Row of `quadrature` of `label` in mean()/cov().
  std::size_t row_of(std::string_view label, Quadrature quadrature) const;

  double mean_of(std::string_view label, Quadrature quadrature) const;
  double variance(std::string_view label, Quadrature quadrature) const;

private:
  std::vector<ModeId> modes_;
  Vector mean_;
  Matrix cov_;
};

/// Linear canonical map r' = S r + d acting on `input_modes`. The modes at the
/// same positions are renamed to `output_modes` after the map, which lets a
/// map consume one temporal mode and emit another (reading modes).
class SymplecticMap {
public:
  SymplecticMap(Matrix s, Vector d, std::vector<ModeId> input_modes,
                std::vector<ModeId> output_modes);
  /// Same input and output modes, zero displacement.
  SymplecticMap(Matrix s, std::vector<ModeId> modes);

  static SymplecticMap identity(std::vector<ModeId> modes);

  const Matrix& matrix() const noexcept { return s_; }
  const Vector& displacement() const noexcept { return d_; }
  const std::vector<ModeId>& input_modes() const noexcept { return in_; }
  const std::vector<ModeId>& output_modes() const noexcept { return out_; }

  /// max |S Ω Sᵀ - Ω|.
  double symplectic_defect() const;

private:
  Matrix s_;
  Vector d_;
  std::vector<ModeId> in_;
  std::vector<ModeId> out_;
};

double symplectic_defect(const Matrix& s);

/// Map applying `second` after `first`; both must act on the same ordered
/// modes, with first's outputs feeding second's inputs.
SymplecticMap compose(const SymplecticMap& second, const SymplecticMap& first);

GaussianState vacuum(const std::vector<ModeId>& modes);
GaussianState thermal(const std::vector<ModeId>& modes, double mean_occupation);

GaussianState apply_map(const GaussianState& state, const SymplecticMap& map);
GaussianState displace(const GaussianState& state, std::string_view label,
                       double dx, double dp);
GaussianState tensor(const GaussianState& a, const GaussianState& b);
GaussianState reduce(const GaussianState& state, const std::vector<std::string>& keep);
GaussianState relabel(const GaussianState& state, std::string_view from, ModeId to);

struct HomodyneResult {
  GaussianState state;  // measured mode removed
  double outcome;
};

/// Conditions the remaining modes on the homodyne outcome of one quadrature
/// (Schur complement). The conditional covariance does not depend on the
/// outcome. Throws SingularConditioning when the measured variance < 1e-14.
HomodyneResult homodyne_condition(const GaussianState& state, std::string_view label,
                                  Quadrature quadrature, double outcome);
/// Same, with the outcome drawn from the marginal normal distribution.
HomodyneResult homodyne_condition(const GaussianState& state, std::string_view label,
                                  Quadrature quadrature, Rng& rng);

struct Feedback {
  std::string label;
  Quadrature quadrature;
  double gain;
};

/// Measure one quadrature, then displace `feedback` targets by gain·outcome.
/// Returns the state averaged over all outcomes (unconditional moments).
GaussianState homodyne_feedback(const GaussianState& state, std::string_view label,
                                Quadrature quadrature, std::span<const Feedback> feedback);

/// var((xa-xb)/√2) + var((pa+pb)/√2); 1 for the two-mode vacuum.
double epr_variance(const GaussianState& state, std::string_view a, std::string_view b);

/// Uhlmann fidelity (Tr√(√ρa ρb √ρa))² between states on the same labels.
double fidelity(const GaussianState& a, const GaussianState& b);

struct PhysicalityReport {
  std::vector<double> symplectic_eigenvalues;  // ascending
  double min_symplectic_eigenvalue = 0.0;
  /// Smallest eigenvalue of cov + iΩ/2 (≥ 0 for a physical state).
  double uncertainty_margin = 0.0;
  double symmetry_defect = 0.0;
  bool physical = false;
};

PhysicalityReport check_physical(const GaussianState& state);
std::vector<double> symplectic_eigenvalues(const Matrix& cov);

// Elementary maps, used by tests and protocol pipelines.
SymplecticMap beamsplitter(const ModeId& a, const ModeId& b, double theta);
SymplecticMap phase_rotation(const ModeId& mode, double theta);
SymplecticMap single_mode_squeeze(const ModeId& mode, double r);
/// a → cosh r·a + sinh r·b†; squeezes xa-xb and pa+pb to e^{-2r}/2 each.
SymplecticMap two_mode_squeeze(const ModeId& a, const ModeId& b, double r);

}  // namespace qlmi
