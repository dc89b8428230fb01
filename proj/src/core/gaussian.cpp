#include "qlmi/gaussian.hpp"

#include "qlmi/constants.hpp"
#include "qlmi/error.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <unordered_set>

namespace qlmi {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::ModeMismatch: return "mode mismatch";
    case ErrorCode::NotSymplectic: return "not symplectic";
    case ErrorCode::Unphysical: return "unphysical state";
    case ErrorCode::SingularConditioning: return "singular conditioning";
    case ErrorCode::NoUniqueSteadyState: return "no unique steady state";
    case ErrorCode::StepFailure: return "integration step failure";
    case ErrorCode::ParseError: return "parse error";
    case ErrorCode::ValidationError: return "validation error";
    case ErrorCode::IoError: return "i/o error";
  }
  return "unknown error";
}

const char* to_string(ModeKind kind) noexcept {
  switch (kind) {
    case ModeKind::Atomic: return "atomic";
    case ModeKind::LightSin: return "light_sin";
    case ModeKind::LightCos: return "light_cos";
    case ModeKind::LightSidebandUpper: return "light_sideband_upper";
    case ModeKind::LightSidebandLower: return "light_sideband_lower";
    case ModeKind::Mechanical: return "mechanical";
    case ModeKind::ReadingMode: return "reading_mode";
  }
  return "unknown";
}

namespace {

void require_unique(const std::vector<ModeId>& modes, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& m : modes) {
    require(!m.label.empty(), ErrorCode::InvalidArgument, std::string(what) + ": empty mode label");
    require(seen.insert(m.label).second, ErrorCode::ModeMismatch,
            std::string(what) + ": duplicate mode label '" + m.label + "'");
  }
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Rows (x,p) of each mode in `labels`, in order.
std::vector<Eigen::Index> rows_for(const GaussianState& state, const std::vector<ModeId>& modes) {
  std::vector<Eigen::Index> rows;
  rows.reserve(2 * modes.size());
  for (const auto& m : modes) {
    const auto i = static_cast<Eigen::Index>(state.index_of(m.label));
    rows.push_back(2 * i);
    rows.push_back(2 * i + 1);
  }
  return rows;
}

}  // namespace

Matrix symplectic_form(std::size_t num_modes) {
  const auto n = static_cast<Eigen::Index>(num_modes);
  Matrix omega = Matrix::Zero(2 * n, 2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

// ---------------------------------------------------------------------------
// GaussianState

GaussianState::GaussianState(std::vector<ModeId> modes, Vector mean, Matrix cov)
    : modes_(std::move(modes)), mean_(std::move(mean)), cov_(std::move(cov)) {
  require_unique(modes_, "GaussianState");
  const auto dim = static_cast<Eigen::Index>(2 * modes_.size());
  require(mean_.size() == dim && cov_.rows() == dim && cov_.cols() == dim,
          ErrorCode::InvalidArgument, "GaussianState: mean/cov dimension does not match 2·modes");
  require(mean_.allFinite() && cov_.allFinite(), ErrorCode::InvalidArgument,
          "GaussianState: non-finite moments");
  const double scale = std::max(1.0, max_abs(cov_));
  require(max_abs(cov_ - cov_.transpose()) <= constants::kSymmetryTolerance * scale,
          ErrorCode::InvalidArgument, "GaussianState: covariance is not symmetric");
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
}

bool GaussianState::has_mode(std::string_view label) const noexcept {
  return std::any_of(modes_.begin(), modes_.end(), [&](const ModeId& m) { return m.label == label; });
}

std::size_t GaussianState::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < modes_.size(); ++i)
    if (modes_[i].label == label)
      return i;
  fail(ErrorCode::ModeMismatch, "unknown mode '" + std::string(label) + "'");
}

std::size_t GaussianState::row_of(std::string_view label, Quadrature quadrature) const {
  return 2 * index_of(label) + (quadrature == Quadrature::P ? 1 : 0);
}

double GaussianState::mean_of(std::string_view label, Quadrature quadrature) const {
  return mean_(static_cast<Eigen::Index>(row_of(label, quadrature)));
}

double GaussianState::variance(std::string_view label, Quadrature quadrature) const {
  const auto r = static_cast<Eigen::Index>(row_of(label, quadrature));
  return cov_(r, r);
}

// ---------------------------------------------------------------------------
// SymplecticMap

double symplectic_defect(const Matrix& s) {
  require(s.rows() == s.cols() && s.rows() % 2 == 0, ErrorCode::InvalidArgument,
          "symplectic matrix must be square with even dimension");
  const Matrix omega = symplectic_form(static_cast<std::size_t>(s.rows() / 2));
  return max_abs(s * omega * s.transpose() - omega);
}

SymplecticMap::SymplecticMap(Matrix s, Vector d, std::vector<ModeId> input_modes,
                             std::vector<ModeId> output_modes)
    : s_(std::move(s)), d_(std::move(d)), in_(std::move(input_modes)), out_(std::move(output_modes)) {
  require(!in_.empty(), ErrorCode::InvalidArgument, "SymplecticMap: no modes");
  require_unique(in_, "SymplecticMap inputs");
  require_unique(out_, "SymplecticMap outputs");
  require(in_.size() == out_.size(), ErrorCode::ModeMismatch,
          "SymplecticMap: input and output mode counts differ");
  const auto dim = static_cast<Eigen::Index>(2 * in_.size());
  require(s_.rows() == dim && s_.cols() == dim && d_.size() == dim, ErrorCode::InvalidArgument,
          "SymplecticMap: matrix dimension does not match 2·modes");
  // Rounding in SΩSᵀ grows with the squared entry size.
  const double defect = qlmi::symplectic_defect(s_);
  const double scale = std::max(1.0, s_.cwiseAbs().maxCoeff());
  require(defect < constants::kSymplecticTolerance * scale * scale, ErrorCode::NotSymplectic,
          "SymplecticMap: |SΩSᵀ-Ω| = " + std::to_string(defect));
}

SymplecticMap::SymplecticMap(Matrix s, std::vector<ModeId> modes)
    : SymplecticMap(s, Vector::Zero(s.rows()), modes, modes) {}

SymplecticMap SymplecticMap::identity(std::vector<ModeId> modes) {
  const auto dim = static_cast<Eigen::Index>(2 * modes.size());
  return SymplecticMap(Matrix::Identity(dim, dim), std::move(modes));
}

double SymplecticMap::symplectic_defect() const { return qlmi::symplectic_defect(s_); }

SymplecticMap compose(const SymplecticMap& second, const SymplecticMap& first) {
  const auto same_labels = [](const std::vector<ModeId>& a, const std::vector<ModeId>& b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(),
                      [](const ModeId& x, const ModeId& y) { return x.label == y.label; });
  };
  require(same_labels(first.output_modes(), second.input_modes()), ErrorCode::ModeMismatch,
          "compose: outputs of the first map must be the inputs of the second");
  return SymplecticMap(second.matrix() * first.matrix(),
                       second.matrix() * first.displacement() + second.displacement(),
                       first.input_modes(), second.output_modes());
}

// ---------------------------------------------------------------------------
// Constructors and structural operations

GaussianState vacuum(const std::vector<ModeId>& modes) {
  require(!modes.empty(), ErrorCode::InvalidArgument, "vacuum: no modes");
  const auto dim = static_cast<Eigen::Index>(2 * modes.size());
  return GaussianState(modes, Vector::Zero(dim),
                       constants::kVacuumVariance * Matrix::Identity(dim, dim));
}

GaussianState thermal(const std::vector<ModeId>& modes, double mean_occupation) {
  require(mean_occupation >= 0.0, ErrorCode::InvalidArgument, "thermal: negative occupation");
  require(!modes.empty(), ErrorCode::InvalidArgument, "thermal: no modes");
  const auto dim = static_cast<Eigen::Index>(2 * modes.size());
  return GaussianState(modes, Vector::Zero(dim),
                       (mean_occupation + constants::kVacuumVariance) * Matrix::Identity(dim, dim));
}

GaussianState apply_map(const GaussianState& state, const SymplecticMap& map) {
  const auto rows = rows_for(state, map.input_modes());
  const auto dim = static_cast<Eigen::Index>(2 * state.num_modes());

  Matrix t = Matrix::Identity(dim, dim);
  Vector d = Vector::Zero(dim);
  const auto& s = map.matrix();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    d(rows[i]) = map.displacement()(ii);
    for (std::size_t j = 0; j < rows.size(); ++j)
      t(rows[i], rows[j]) = s(ii, static_cast<Eigen::Index>(j));
  }

  auto modes = state.modes();
  for (std::size_t k = 0; k < map.input_modes().size(); ++k)
    modes[state.index_of(map.input_modes()[k].label)] = map.output_modes()[k];

  return GaussianState(std::move(modes), t * state.mean() + d, t * state.cov() * t.transpose());
}

GaussianState displace(const GaussianState& state, std::string_view label, double dx, double dp) {
  Vector mean = state.mean();
  mean(static_cast<Eigen::Index>(state.row_of(label, Quadrature::X))) += dx;
  mean(static_cast<Eigen::Index>(state.row_of(label, Quadrature::P))) += dp;
  return GaussianState(state.modes(), std::move(mean), state.cov());
}

GaussianState tensor(const GaussianState& a, const GaussianState& b) {
  auto modes = a.modes();
  modes.insert(modes.end(), b.modes().begin(), b.modes().end());
  const auto na = a.mean().size();
  const auto nb = b.mean().size();
  Vector mean(na + nb);
  mean << a.mean(), b.mean();
  Matrix cov = Matrix::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return GaussianState(std::move(modes), std::move(mean), std::move(cov));
}

GaussianState reduce(const GaussianState& state, const std::vector<std::string>& keep) {
  require(!keep.empty(), ErrorCode::InvalidArgument, "reduce: nothing to keep");
  std::vector<ModeId> modes;
  for (const auto& label : keep)
    modes.push_back(state.modes()[state.index_of(label)]);
  const auto rows = rows_for(state, modes);
  const auto dim = static_cast<Eigen::Index>(rows.size());
  Vector mean(dim);
  Matrix cov(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    mean(i) = state.mean()(rows[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < dim; ++j)
      cov(i, j) = state.cov()(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
  }
  return GaussianState(std::move(modes), std::move(mean), std::move(cov));
}

GaussianState relabel(const GaussianState& state, std::string_view from, ModeId to) {
  auto modes = state.modes();
  modes[state.index_of(from)] = std::move(to);
  return GaussianState(std::move(modes), state.mean(), state.cov());
}

// ---------------------------------------------------------------------------
// Measurement

namespace {

struct Partition {
  std::vector<Eigen::Index> rest;  // rows of the modes that survive
  Eigen::Index measured;
};

Partition partition(const GaussianState& state, std::string_view label, Quadrature q) {
  const auto mode = static_cast<Eigen::Index>(state.index_of(label));
  Partition p{{}, 2 * mode + (q == Quadrature::P ? 1 : 0)};
  for (Eigen::Index r = 0; r < state.mean().size(); ++r)
    if (r / 2 != mode)
      p.rest.push_back(r);
  return p;
}

std::vector<ModeId> modes_without(const GaussianState& state, std::string_view label) {
  std::vector<ModeId> out;
  for (const auto& m : state.modes())
    if (m.label != label)
      out.push_back(m);
  return out;
}

double measured_variance(const GaussianState& state, Eigen::Index row) {
  const double v = state.cov()(row, row);
  require(v >= constants::kSingularVariance, ErrorCode::SingularConditioning,
          "homodyne: measured quadrature variance " + std::to_string(v) + " is singular");
  return v;
}

}  // namespace

HomodyneResult homodyne_condition(const GaussianState& state, std::string_view label,
                                  Quadrature quadrature, double outcome) {
  const auto part = partition(state, label, quadrature);
  const double v = measured_variance(state, part.measured);
  const auto dim = static_cast<Eigen::Index>(part.rest.size());

  Vector cross(dim);
  Vector mean(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto r = part.rest[static_cast<std::size_t>(i)];
    cross(i) = state.cov()(r, part.measured);
    mean(i) = state.mean()(r);
  }
  Matrix cov(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      cov(i, j) = state.cov()(part.rest[static_cast<std::size_t>(i)], part.rest[static_cast<std::size_t>(j)]);

  mean += cross * ((outcome - state.mean()(part.measured)) / v);
  cov -= cross * cross.transpose() / v;
  return {GaussianState(modes_without(state, label), std::move(mean), std::move(cov)), outcome};
}

HomodyneResult homodyne_condition(const GaussianState& state, std::string_view label,
                                  Quadrature quadrature, Rng& rng) {
  const auto row = static_cast<Eigen::Index>(state.row_of(label, quadrature));
  const double v = measured_variance(state, row);
  std::normal_distribution<double> marginal(state.mean()(row), std::sqrt(v));
  return homodyne_condition(state, label, quadrature, marginal(rng));
}

GaussianState homodyne_feedback(const GaussianState& state, std::string_view label,
                                Quadrature quadrature, std::span<const Feedback> feedback) {
  const auto row = static_cast<Eigen::Index>(state.row_of(label, quadrature));
  const double v = measured_variance(state, row);
  // Conditioning on the mean outcome gives the outcome-independent covariance;
  // feedback then turns the outcome spread into a known linear displacement.
  auto cond = homodyne_condition(state, label, quadrature, state.mean()(row));
  const auto dim = cond.state.mean().size();

  Vector gain = Vector::Zero(dim);  // d(conditional mean)/d(outcome)
  const auto part = partition(state, label, quadrature);
  for (Eigen::Index i = 0; i < dim; ++i)
    gain(i) = state.cov()(part.rest[static_cast<std::size_t>(i)], row) / v;

  Vector mean = cond.state.mean();
  for (const auto& f : feedback) {
    const auto r = static_cast<Eigen::Index>(cond.state.row_of(f.label, f.quadrature));
    gain(r) += f.gain;
    mean(r) += f.gain * state.mean()(row);
  }
  Matrix cov = cond.state.cov() + v * gain * gain.transpose();
  return GaussianState(cond.state.modes(), std::move(mean), std::move(cov));
}

// ---------------------------------------------------------------------------
// Diagnostics

double epr_variance(const GaussianState& state, std::string_view a, std::string_view b) {
  require(a != b, ErrorCode::ModeMismatch, "epr_variance: modes must differ");
  const auto n = state.mean().size();
  Vector u = Vector::Zero(n);
  Vector w = Vector::Zero(n);
  const double h = 1.0 / std::sqrt(2.0);
  u(static_cast<Eigen::Index>(state.row_of(a, Quadrature::X))) = h;
  u(static_cast<Eigen::Index>(state.row_of(b, Quadrature::X))) = -h;
  w(static_cast<Eigen::Index>(state.row_of(a, Quadrature::P))) = h;
  w(static_cast<Eigen::Index>(state.row_of(b, Quadrature::P))) = h;
  return u.dot(state.cov() * u) + w.dot(state.cov() * w);
}

std::vector<double> symplectic_eigenvalues(const Matrix& cov) {
  const auto n = cov.rows() / 2;
  const Matrix omega = symplectic_form(static_cast<std::size_t>(n));
  std::vector<double> nu;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.eigenvalues().minCoeff() > 0.0) {
    // √V Ω √V is antisymmetric with eigenvalues ±iν; -(√VΩ√V)² is PSD with ν² twice.
    const Matrix root = eig.operatorSqrt();
    const Matrix m = root * omega * root;
    Eigen::SelfAdjointEigenSolver<Matrix> sq(-(m * m));
    for (Eigen::Index k = 0; k < 2 * n; k += 2) {
      const double a = std::max(sq.eigenvalues()(k), 0.0);
      const double b = std::max(sq.eigenvalues()(k + 1), 0.0);
      nu.push_back(0.5 * (std::sqrt(a) + std::sqrt(b)));
    }
  } else {
    Eigen::EigenSolver<Matrix> es(omega * cov);
    std::vector<double> moduli;
    for (Eigen::Index k = 0; k < 2 * n; ++k)
      moduli.push_back(std::abs(es.eigenvalues()(k)));
    std::sort(moduli.begin(), moduli.end());
    for (std::size_t k = 0; k + 1 < moduli.size(); k += 2)
      nu.push_back(0.5 * (moduli[k] + moduli[k + 1]));
  }
  std::sort(nu.begin(), nu.end());
  return nu;
}

PhysicalityReport check_physical(const GaussianState& state) {
  PhysicalityReport report;
  const Matrix& cov = state.cov();
  if (cov.size() == 0) {
    report.physical = true;
    return report;
  }
  report.symmetry_defect = max_abs(cov - cov.transpose()) / std::max(1.0, max_abs(cov));
  report.symplectic_eigenvalues = symplectic_eigenvalues(cov);
  report.min_symplectic_eigenvalue = report.symplectic_eigenvalues.front();

  const Matrix omega = symplectic_form(state.num_modes());
  const Eigen::MatrixXcd h = cov.cast<std::complex<double>>() +
                             std::complex<double>(0.0, 0.5) * omega.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
  report.uncertainty_margin = eig.eigenvalues().minCoeff();

  const bool positive = Eigen::SelfAdjointEigenSolver<Matrix>(cov, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff() > 0.0;
  report.physical = positive && report.symmetry_defect <= constants::kSymmetryTolerance &&
                    report.min_symplectic_eigenvalue >=
                        constants::kVacuumVariance - constants::kPhysicalityTolerance;
  return report;
}

double fidelity(const GaussianState& a, const GaussianState& b) {
  require(a.num_modes() == b.num_modes(), ErrorCode::ModeMismatch, "fidelity: different mode sets");
  for (const auto& m : a.modes())
    require(b.has_mode(m.label), ErrorCode::ModeMismatch, "fidelity: mode '" + m.label + "' missing");
  require(check_physical(a).physical && check_physical(b).physical, ErrorCode::Unphysical,
          "fidelity: unphysical input state");

  // Bring b into a's mode order.
  std::vector<std::string> order;
  for (const auto& m : a.modes())
    order.push_back(m.label);
  const GaussianState bb = reduce(b, order);

  const auto is_pure = [](const GaussianState& s) {
    for (double nu : symplectic_eigenvalues(s.cov()))
      if (std::abs(nu - 0.5) > 1e-9)
        return false;
    return true;
  };
  if (is_pure(a) || is_pure(bb)) {
    // Tr(ρa ρb) is the fidelity when either state is pure.
    const Matrix vsum = a.cov() + bb.cov();
    const Eigen::LDLT<Matrix> ldlt(vsum);
    const Vector delta = bb.mean() - a.mean();
    const double f = std::exp(-0.5 * delta.dot(ldlt.solve(delta))) / std::sqrt(vsum.determinant());
    return std::clamp(f, 0.0, 1.0);
  }

  // Root fidelity of Banchi, Braunstein & Pirandola for covariances with vacuum I/2;
  // the squared value is returned.
  using Cplx = Eigen::MatrixXcd;
  const auto n = a.num_modes();
  const auto dim = static_cast<Eigen::Index>(2 * n);
  const Matrix omega = symplectic_form(n);
  const Matrix& v1 = a.cov();
  const Matrix& v2 = bb.cov();
  const Matrix vsum = v1 + v2;
  const Eigen::PartialPivLU<Matrix> lu(vsum);
  const Vector delta = bb.mean() - a.mean();

  const Matrix vaux = omega.transpose() * lu.solve(omega / 4.0 + v2 * omega * v1);
  const Matrix w = vaux * omega;
  const Matrix inner = Matrix::Identity(dim, dim) + (w * w).inverse() / 4.0;
  const Cplx root = inner.cast<std::complex<double>>().sqrt();
  const Cplx arg = 2.0 * (root + Cplx::Identity(dim, dim)) * vaux.cast<std::complex<double>>();
  const double ftot4 = std::abs(arg.determinant());

  const double root_fid = std::pow(ftot4 / lu.determinant(), 0.25) *
                          std::exp(-0.25 * delta.dot(lu.solve(delta)));
  return std::clamp(root_fid * root_fid, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Elementary maps

SymplecticMap beamsplitter(const ModeId& a, const ModeId& b, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix m = Matrix::Zero(4, 4);
  for (int q = 0; q < 2; ++q) {
    m(q, q) = c;
    m(q, 2 + q) = s;
    m(2 + q, q) = -s;
    m(2 + q, 2 + q) = c;
  }
  return SymplecticMap(std::move(m), {a, b});
}

SymplecticMap phase_rotation(const ModeId& mode, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix m(2, 2);
  m << c, s, -s, c;
  return SymplecticMap(std::move(m), {mode});
}

SymplecticMap single_mode_squeeze(const ModeId& mode, double r) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = std::exp(-r);
  m(1, 1) = std::exp(r);
  return SymplecticMap(std::move(m), {mode});
}

SymplecticMap two_mode_squeeze(const ModeId& a, const ModeId& b, double r) {
  const double ch = std::cosh(r);
  const double sh = std::sinh(r);
  Matrix m(4, 4);
  m << ch, 0, sh, 0,
       0, ch, 0, -sh,
       sh, 0, ch, 0,
       0, -sh, 0, ch;
  return SymplecticMap(std::move(m), {a, b});
}

}  // namespace qlmi
