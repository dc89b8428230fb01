#include "qlmi/dissipative.hpp"

#include "qlmi/constants.hpp"
#include "qlmi/error.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace qlmi::dissipative {

namespace {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

const Complex kI{0.0, 1.0};
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

// a_k and a_k† as coefficient vectors over 2n quadratures.
CVector annihilation(Eigen::Index n, Eigen::Index k) {
  CVector c = CVector::Zero(2 * n);
  c(2 * k) = kInvSqrt2;
  c(2 * k + 1) = kI * kInvSqrt2;
  return c;
}

CVector creation(Eigen::Index n, Eigen::Index k) { return annihilation(n, k).conjugate(); }

CVector quadrature(Eigen::Index n, Eigen::Index row) {
  CVector c = CVector::Zero(2 * n);
  c(row) = 1.0;
  return c;
}

void moments_from_jumps(const std::vector<CVector>& jumps, const std::vector<double>& rates,
                        Eigen::Index dim, Matrix& drift, Matrix& diffusion) {
  CMatrix m = CMatrix::Zero(dim, dim);
  for (std::size_t j = 0; j < jumps.size(); ++j)
    m += rates[j] * jumps[j] * jumps[j].adjoint();
  const Matrix omega = symplectic_form(static_cast<std::size_t>(dim / 2));
  drift = -omega * m.imag();
  diffusion = omega * m.real() * omega.transpose();
  diffusion = 0.5 * (diffusion + diffusion.transpose()).eval();
}

std::vector<Eigen::Index> model_rows(const LindbladModel& model, const GaussianState& state) {
  std::vector<Eigen::Index> rows;
  for (const auto& m : model.modes) {
    const auto i = static_cast<Eigen::Index>(state.index_of(m.label));
    require(state.modes()[static_cast<std::size_t>(i)].kind == m.kind, ErrorCode::ModeMismatch,
            "mode '" + m.label + "' has a different kind in the state");
    rows.push_back(2 * i);
    rows.push_back(2 * i + 1);
  }
  return rows;
}

}  // namespace

JumpOperators jump_operators_unchecked(double mu, double nu) {
  JumpOperators j;
  j.a = mu * annihilation(2, 0) - nu * creation(2, 1);
  j.b = mu * annihilation(2, 1) - nu * creation(2, 0);
  return j;
}

JumpOperators jump_operators(double mu, double nu) {
  require(std::isfinite(mu) && std::isfinite(nu) && std::abs(mu * mu - nu * nu - 1.0) < 1e-9,
          ErrorCode::InvalidArgument, "jump operators need μ² − ν² = 1");
  return jump_operators_unchecked(mu, nu);
}

double LindbladModel::rebuild_defect() const {
  Matrix a, d;
  moments_from_jumps(jumps, rates, static_cast<Eigen::Index>(dimension()), a, d);
  if (a.size() == 0)
    return 0.0;
  return std::max((a - drift).cwiseAbs().maxCoeff(), (d - diffusion).cwiseAbs().maxCoeff());
}

LindbladModel make_model(std::vector<ModeId> modes, std::vector<CVector> jumps, std::vector<double> rates) {
  require(jumps.size() == rates.size(), ErrorCode::InvalidArgument, "one rate per jump operator");
  const auto dim = static_cast<Eigen::Index>(2 * modes.size());
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    require(jumps[j].size() == dim, ErrorCode::InvalidArgument, "jump vector has the wrong length");
    require(std::isfinite(rates[j]) && rates[j] >= 0.0, ErrorCode::InvalidArgument,
            "jump rates must be non-negative");
  }
  LindbladModel model;
  model.modes = std::move(modes);
  model.jumps = std::move(jumps);
  model.rates = std::move(rates);
  moments_from_jumps(model.jumps, model.rates, dim, model.drift, model.diffusion);
  return model;
}

LindbladModel build_ideal_model(double mu, double nu, double d, double gamma, const EnsembleModes& modes) {
  require(std::isfinite(d) && d >= 0.0, ErrorCode::InvalidArgument, "optical depth d must be non-negative");
  require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::InvalidArgument, "Γ must be positive");
  const auto j = jump_operators(mu, nu);
  return make_model({modes.first, modes.second}, {j.a, j.b}, {d * gamma, d * gamma});
}

const char* to_string(NoiseKind kind) noexcept {
  switch (kind) {
    case NoiseKind::SingleAtomDecay: return "single_atom_decay";
    case NoiseKind::Pump: return "pump";
    case NoiseKind::Repump: return "repump";
    case NoiseKind::Dephasing: return "dephasing";
  }
  return "?";
}

NoiseKind noise_kind_from_string(std::string_view name) {
  for (auto k : {NoiseKind::SingleAtomDecay, NoiseKind::Pump, NoiseKind::Repump, NoiseKind::Dephasing})
    if (name == to_string(k))
      return k;
  fail(ErrorCode::InvalidArgument, "unknown noise channel '" + std::string(name) + "'");
}

LindbladModel add_noise_channel(const LindbladModel& model, NoiseKind kind, double rate) {
  require(std::isfinite(rate) && rate >= 0.0, ErrorCode::InvalidArgument, "noise rate must be non-negative");
  if (rate == 0.0)
    return model;
  auto jumps = model.jumps;
  auto rates = model.rates;
  const auto n = static_cast<Eigen::Index>(model.modes.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    switch (kind) {
      case NoiseKind::SingleAtomDecay:
        jumps.push_back(annihilation(n, k));
        rates.push_back(rate);
        break;
      case NoiseKind::Pump:
      case NoiseKind::Repump:
        jumps.push_back(annihilation(n, k));
        rates.push_back(rate);
        jumps.push_back(creation(n, k));
        rates.push_back(rate * (kind == NoiseKind::Pump ? kPumpExcess : kRepumpExcess));
        break;
      case NoiseKind::Dephasing:
        jumps.push_back(quadrature(n, 2 * k));
        rates.push_back(rate);
        jumps.push_back(quadrature(n, 2 * k + 1));
        rates.push_back(rate);
        break;
    }
  }
  return make_model(model.modes, std::move(jumps), std::move(rates));
}

GaussianState evolve(const LindbladModel& model, const GaussianState& state, double t) {
  require(std::isfinite(t) && t >= 0.0, ErrorCode::InvalidArgument, "evolution time must be non-negative");
  if (t == 0.0 || model.modes.empty())
    return state;
  const auto rows = model_rows(model, state);
  const auto m = static_cast<Eigen::Index>(rows.size());

  // Van Loan: exp([[−A, D],[0, Aᵀ]] t) = [[·, F12],[0, F22]], with
  // e^{At} = F22ᵀ and ∫₀ᵗ e^{As} D e^{Aᵀs} ds = F22ᵀ F12.
  Matrix block = Matrix::Zero(2 * m, 2 * m);
  block.topLeftCorner(m, m) = -model.drift * t;
  block.topRightCorner(m, m) = model.diffusion * t;
  block.bottomRightCorner(m, m) = model.drift.transpose() * t;
  const Matrix e = block.exp();
  const Matrix phi = e.bottomRightCorner(m, m).transpose();
  const Matrix q = phi * e.topRightCorner(m, m);

  const auto dim = static_cast<Eigen::Index>(2 * state.num_modes());
  Matrix full = Matrix::Identity(dim, dim);
  Matrix noise = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      full(rows[i], rows[j]) = phi(i, j);
      noise(rows[i], rows[j]) = q(i, j);
    }
  Vector mean = full * state.mean();
  Matrix cov = full * state.cov() * full.transpose() + noise;
  cov = 0.5 * (cov + cov.transpose()).eval();
  return GaussianState(state.modes(), std::move(mean), std::move(cov));
}

SpectralReport is_unique(const LindbladModel& model) {
  SpectralReport report;
  if (model.drift.size() == 0)
    return report;
  Eigen::EigenSolver<Matrix> es(model.drift, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    report.eigenvalues.push_back(es.eigenvalues()(i));
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
            [](Complex a, Complex b) { return a.real() < b.real(); });
  report.max_real_part = report.eigenvalues.back().real();
  const double scale = std::max(1.0, model.drift.cwiseAbs().maxCoeff());
  report.unique = report.max_real_part < -1e-10 * scale;
  return report;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& d) {
  require(a.rows() == a.cols() && d.rows() == a.rows() && d.cols() == a.cols(), ErrorCode::InvalidArgument,
          "Lyapunov: dimension mismatch");
  const auto n = a.rows();
  Eigen::ComplexSchur<CMatrix> schur(a.cast<Complex>());
  const CMatrix& t = schur.matrixT();
  const CMatrix& u = schur.matrixU();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i)
    require(t(i, i).real() < -1e-10 * scale, ErrorCode::NoUniqueSteadyState,
            "drift is not Hurwitz; no unique steady state");

  // T Y + Y T^H = C with C = −U^H D U; columns from the last one back.
  const CMatrix c = -(u.adjoint() * d.cast<Complex>() * u);
  CMatrix y = CMatrix::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    CVector rhs = c.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k)
      rhs -= y.col(k) * std::conj(t(j, k));
    CMatrix shifted = t;
    shifted.diagonal().array() += std::conj(t(j, j));
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  Matrix sigma = (u * y * u.adjoint()).real();
  return 0.5 * (sigma + sigma.transpose());
}

GaussianState steady_state(const LindbladModel& model) {
  require(!model.modes.empty(), ErrorCode::InvalidArgument, "model has no modes");
  Matrix sigma = solve_lyapunov(model.drift, model.diffusion);
  Vector mean = Vector::Zero(sigma.rows());
  return GaussianState(model.modes, std::move(mean), std::move(sigma));
}

double jump_occupation(const GaussianState& state, const std::vector<ModeId>& modes, const CVector& c) {
  const auto rows = [&] {
    std::vector<Eigen::Index> r;
    for (const auto& m : modes) {
      const auto i = static_cast<Eigen::Index>(state.index_of(m.label));
      r.push_back(2 * i);
      r.push_back(2 * i + 1);
    }
    return r;
  }();
  const auto m = static_cast<Eigen::Index>(rows.size());
  require(c.size() == m, ErrorCode::InvalidArgument, "jump vector has the wrong length");
  // ⟨r_i r_j⟩ = Σ_ij + iΩ_ij/2 + ⟨r_i⟩⟨r_j⟩
  CMatrix second(m, m);
  const Matrix omega = symplectic_form(modes.size());
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      second(i, j) = Complex(state.cov()(rows[i], rows[j]) + state.mean()(rows[i]) * state.mean()(rows[j]),
                             0.5 * omega(i, j));
  return (c.adjoint() * second * c)(0, 0).real();
}

EntanglementReport entanglement_report(const GaussianState& state, std::string_view a, std::string_view b) {
  EntanglementReport r;
  r.epr_variance = epr_variance(state, a, b);
  r.entangled = r.epr_variance < constants::kEprBound - constants::kEprMargin;
  return r;
}

}  // namespace qlmi::dissipative
