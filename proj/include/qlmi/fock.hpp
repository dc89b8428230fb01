#pragma once

// Truncated Fock-space reference engine, used to certify the Gaussian code.
//
// Basis |n_1,…,n_m⟩ with n_k ≤ cutoff, first mode most significant. Density
// matrices are dense; operators are sparse. Memory is 16·D² bytes per copy of
// ρ with D = Π(cutoff+1), about 15 MB at two modes and cutoff 30; the
// adaptive stepper keeps roughly ten copies.

#include "qlmi/dissipative.hpp"
#include "qlmi/gaussian.hpp"

#include <Eigen/Sparse>

#include <complex>
#include <vector>

namespace qlmi::fock {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using SparseOp = Eigen::SparseMatrix<Complex>;

inline constexpr int kDefaultCutoff = 30;
inline constexpr double kLeakWarning = 1e-3;

struct FockState {
  std::vector<int> cutoffs;  // highest occupation kept per mode
  CMatrix rho;
  double leaked = 0.0;        // 1 − Tr ρ before renormalization
  bool leak_warning = false;  // leaked > kLeakWarning

  Eigen::Index dimension() const { return rho.rows(); }
};

struct FockVector {
  std::vector<int> cutoffs;
  CVector psi;
};

Eigen::Index space_dimension(const std::vector<int>& cutoffs);

/// Density matrix of a Gaussian state of up to three modes, truncated at
/// `cutoff` and renormalized; the discarded weight is reported.
FockState from_gaussian(const GaussianState& state, int cutoff = kDefaultCutoff);

FockState basis_state(const std::vector<int>& cutoffs, const std::vector<int>& occupation);
FockState to_density(const FockVector& v);
/// Product of coherent states, a_k|ψ⟩ = α_k|ψ⟩ up to truncation.
FockVector coherent_state(const std::vector<int>& cutoffs, const std::vector<Complex>& alpha);

SparseOp annihilation(const std::vector<int>& cutoffs, std::size_t mode);
/// L = c·r for a quadrature coefficient vector c of length 2m.
SparseOp linear_operator(const std::vector<int>& cutoffs, const dissipative::CVector& c);
/// H = ½ rᵀ K r for symmetric K (normal ordering constants kept).
SparseOp quadratic_hamiltonian(const std::vector<int>& cutoffs, const Matrix& k);

struct Moments {
  Vector mean;
  Matrix cov;
};

/// Quadrature moments under the x=(a+a†)/√2 convention.
Moments moments(const FockState& state);
Moments moments(const FockVector& state);

double trace(const FockState& state);
double hermiticity_defect(const FockState& state);
double min_eigenvalue(const FockState& state);

struct EvolveOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-7;
  double initial_step = 1e-3;
  std::size_t max_steps = 1000000;
};

/// ρ̇ = −i[H,ρ] + Σ rate·(LρL† − ½{L†L,ρ}) over time t with an adaptive
/// Dormand–Prince stepper. Throws StepFailure when the stepper gives up.
FockState evolve_lindblad(const FockState& state, const std::vector<SparseOp>& jumps,
                          const std::vector<double>& rates, double t, const SparseOp* hamiltonian = nullptr,
                          const EvolveOptions& options = {});

/// The same for a Gaussian Lindblad model, with modes in model order.
FockState evolve_lindblad(const FockState& state, const dissipative::LindbladModel& model, double t,
                          const EvolveOptions& options = {});

/// K with S = exp(ΩK), so that H = ½ rᵀ K r generates S in unit time.
/// Throws InvalidArgument when S has no real logarithm.
Matrix generator(const Matrix& s);

/// e^{−iH}|ψ⟩ for the generator of S (S acting on all modes of ψ in order).
FockVector apply_symplectic(const FockVector& state, const Matrix& s, const EvolveOptions& options = {});

struct DarkState {
  FockState state;
  double residual = 0.0;  // smallest eigenvalue of Σ rate·L†L
  double gap = 0.0;       // distance to the next eigenvalue
};

/// The common dark state of the jumps in the truncated space, the ground
/// state of Σ rate·L†L. It is the steady state whenever that eigenvalue is 0.
DarkState dark_state(const std::vector<int>& cutoffs, const std::vector<SparseOp>& jumps,
                     const std::vector<double>& rates);
DarkState dark_state(const dissipative::LindbladModel& model, int cutoff = kDefaultCutoff);

}  // namespace qlmi::fock
