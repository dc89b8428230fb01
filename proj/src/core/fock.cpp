#include "qlmi/fock.hpp"

#include "qlmi/error.hpp"

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace qlmi::fock {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

constexpr Eigen::Index kMaxRecurrenceEntries = 20'000'000;
const Complex kI{0.0, 1.0};

std::vector<Eigen::Index> strides(const std::vector<int>& cutoffs) {
  std::vector<Eigen::Index> s(cutoffs.size());
  Eigen::Index acc = 1;
  for (std::size_t k = cutoffs.size(); k-- > 0;) {
    s[k] = acc;
    acc *= cutoffs[k] + 1;
  }
  return s;
}

void require_cutoffs(const std::vector<int>& cutoffs) {
  require(!cutoffs.empty(), ErrorCode::InvalidArgument, "Fock space needs at least one mode");
  for (int c : cutoffs)
    require(c >= 0, ErrorCode::InvalidArgument, "cutoff must be non-negative");
}

// Quadrature operators (x_1, p_1, …) in the truncated space.
std::vector<SparseOp> quadrature_ops(const std::vector<int>& cutoffs) {
  std::vector<SparseOp> r;
  const double s = 1.0 / std::sqrt(2.0);
  for (std::size_t k = 0; k < cutoffs.size(); ++k) {
    const SparseOp a = annihilation(cutoffs, k);
    const SparseOp ad = a.adjoint();
    r.push_back(s * (a + ad));
    r.push_back(-kI * s * (a - ad));
  }
  return r;
}

Eigen::Map<const CMatrix> as_matrix(const State& x, Eigen::Index n) {
  return {reinterpret_cast<const Complex*>(x.data()), n, n};
}

Eigen::Map<CMatrix> as_matrix(State& x, Eigen::Index n) {
  return {reinterpret_cast<Complex*>(x.data()), n, n};
}

template <typename System>
void integrate(System&& system, State& x, double t_end, const EvolveOptions& options) {
  auto stepper = odeint::make_controlled(options.abs_tol, options.rel_tol, odeint::runge_kutta_dopri5<State>());
  double t = 0.0;
  double dt = std::min(options.initial_step, t_end);
  std::size_t steps = 0;
  while (t < t_end) {
    if (t + dt > t_end)
      dt = t_end - t;
    const auto result = stepper.try_step(system, x, t, dt);
    if (result == odeint::success)
      ++steps;
    require(steps < options.max_steps, ErrorCode::StepFailure, "Fock evolution: step budget exhausted");
    require(dt > 1e-15 * std::max(1.0, t_end), ErrorCode::StepFailure, "Fock evolution: step size underflow");
  }
  for (double v : x)
    require(std::isfinite(v), ErrorCode::StepFailure, "Fock evolution: non-finite state");
}

}  // namespace

Eigen::Index space_dimension(const std::vector<int>& cutoffs) {
  Eigen::Index d = 1;
  for (int c : cutoffs)
    d *= c + 1;
  return d;
}

FockState from_gaussian(const GaussianState& g, int cutoff) {
  const auto m = static_cast<Eigen::Index>(g.num_modes());
  require(m >= 1 && m <= 3, ErrorCode::InvalidArgument, "from_gaussian supports one to three modes");
  require(cutoff >= 0, ErrorCode::InvalidArgument, "cutoff must be non-negative");
  const Eigen::Index d = cutoff + 1;
  const Eigen::Index n2 = 2 * m;
  Eigen::Index total = 1;
  for (Eigen::Index i = 0; i < n2; ++i) {
    total *= d;
    require(total <= kMaxRecurrenceEntries, ErrorCode::InvalidArgument,
            "from_gaussian: (cutoff+1)^(2·modes) too large");
  }

  // Moments of ζ = (a_1…a_m, a_1†…a_m†).
  CMatrix w = CMatrix::Zero(n2, n2);
  const double s = 1.0 / std::sqrt(2.0);
  for (Eigen::Index k = 0; k < m; ++k) {
    w(k, 2 * k) = s;
    w(k, 2 * k + 1) = kI * s;
    w(m + k, 2 * k) = s;
    w(m + k, 2 * k + 1) = -kI * s;
  }
  const CMatrix sigma = w * g.cov().cast<Complex>() * w.adjoint();
  const CVector alpha = w * g.mean().cast<Complex>();
  const CMatrix q = sigma + 0.5 * CMatrix::Identity(n2, n2);
  const CMatrix q_inv = q.inverse();
  CMatrix x = CMatrix::Zero(n2, n2);
  x.topRightCorner(m, m).setIdentity();
  x.bottomLeftCorner(m, m).setIdentity();
  const CMatrix a = x * (CMatrix::Identity(n2, n2) - q_inv);
  const Complex t0 = std::exp(-0.5 * (alpha.adjoint() * q_inv * alpha)(0, 0)) / std::sqrt(q.determinant());
  const CVector gamma = alpha.conjugate() - a * alpha;

  std::vector<Eigen::Index> stride(n2);
  {
    Eigen::Index acc = 1;
    for (Eigen::Index i = n2; i-- > 0;) {
      stride[i] = acc;
      acc *= d;
    }
  }
  std::vector<double> sqrt_n(d + 1);
  for (Eigen::Index i = 0; i <= d; ++i)
    sqrt_n[i] = std::sqrt(static_cast<double>(i));

  CVector f(total);
  f(0) = t0;
  std::vector<Eigen::Index> digit(n2, 0);
  for (Eigen::Index p = 1; p < total; ++p) {
    for (Eigen::Index i = n2; i-- > 0;) {
      if (++digit[i] < d)
        break;
      digit[i] = 0;
    }
    Eigen::Index i = n2 - 1;
    while (digit[i] == 0)
      --i;
    // F_{k+e_i} = (γ_i F_k + Σ_j A_ij √k_j F_{k−e_j}) / √(k_i+1)
    const Eigen::Index k = p - stride[i];
    Complex v = gamma(i) * f(k);
    for (Eigen::Index j = 0; j < n2; ++j) {
      const Eigen::Index kj = digit[j] - (j == i ? 1 : 0);
      if (kj > 0 && a(i, j) != 0.0)
        v += a(i, j) * sqrt_n[kj] * f(k - stride[j]);
    }
    f(p) = v / sqrt_n[digit[i]];
  }

  const Eigen::Index dim = total / [&] {
    Eigen::Index b = 1;
    for (Eigen::Index i = 0; i < m; ++i)
      b *= d;
    return b;
  }();
  FockState out;
  out.cutoffs.assign(static_cast<std::size_t>(m), cutoff);
  // F reshaped with the annihilation block as rows is ρᵀ.
  out.rho = Eigen::Map<const CMatrix>(f.data(), dim, dim);
  out.rho = (0.5 * (out.rho + out.rho.adjoint())).eval();
  const double tr = out.rho.trace().real();
  out.leaked = std::max(0.0, 1.0 - tr);
  out.leak_warning = out.leaked > kLeakWarning;
  out.rho /= tr;
  return out;
}

FockState basis_state(const std::vector<int>& cutoffs, const std::vector<int>& occupation) {
  require_cutoffs(cutoffs);
  require(occupation.size() == cutoffs.size(), ErrorCode::InvalidArgument, "one occupation per mode");
  const auto s = strides(cutoffs);
  Eigen::Index idx = 0;
  for (std::size_t k = 0; k < cutoffs.size(); ++k) {
    require(occupation[k] >= 0 && occupation[k] <= cutoffs[k], ErrorCode::InvalidArgument,
            "occupation outside the truncated space");
    idx += occupation[k] * s[k];
  }
  FockState out;
  out.cutoffs = cutoffs;
  const auto n = space_dimension(cutoffs);
  out.rho = CMatrix::Zero(n, n);
  out.rho(idx, idx) = 1.0;
  return out;
}

FockState to_density(const FockVector& v) {
  FockState out;
  out.cutoffs = v.cutoffs;
  out.rho = v.psi * v.psi.adjoint();
  return out;
}

FockVector coherent_state(const std::vector<int>& cutoffs, const std::vector<Complex>& alpha) {
  require_cutoffs(cutoffs);
  require(alpha.size() == cutoffs.size(), ErrorCode::InvalidArgument, "one amplitude per mode");
  CVector psi = CVector::Ones(1);
  for (std::size_t k = 0; k < cutoffs.size(); ++k) {
    CVector single(cutoffs[k] + 1);
    Complex c = std::exp(-0.5 * std::norm(alpha[k]));
    for (int n = 0; n <= cutoffs[k]; ++n) {
      single(n) = c;
      c *= alpha[k] / std::sqrt(static_cast<double>(n + 1));
    }
    CVector next(psi.size() * single.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i)
      next.segment(i * single.size(), single.size()) = psi(i) * single;
    psi = std::move(next);
  }
  psi.normalize();
  return {cutoffs, psi};
}

SparseOp annihilation(const std::vector<int>& cutoffs, std::size_t mode) {
  require_cutoffs(cutoffs);
  require(mode < cutoffs.size(), ErrorCode::InvalidArgument, "mode index out of range");
  const auto s = strides(cutoffs);
  const auto n = space_dimension(cutoffs);
  const Eigen::Index d = cutoffs[mode] + 1;
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index idx = 0; idx < n; ++idx) {
    const Eigen::Index occ = (idx / s[mode]) % d;
    if (occ > 0)
      t.emplace_back(idx - s[mode], idx, std::sqrt(static_cast<double>(occ)));
  }
  SparseOp a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

SparseOp linear_operator(const std::vector<int>& cutoffs, const dissipative::CVector& c) {
  require(c.size() == static_cast<Eigen::Index>(2 * cutoffs.size()), ErrorCode::InvalidArgument,
          "coefficient vector length must be 2·modes");
  const auto n = space_dimension(cutoffs);
  SparseOp l(n, n);
  const double s = 1.0 / std::sqrt(2.0);
  for (std::size_t k = 0; k < cutoffs.size(); ++k) {
    const Complex cx = c(static_cast<Eigen::Index>(2 * k));
    const Complex cp = c(static_cast<Eigen::Index>(2 * k + 1));
    if (cx == 0.0 && cp == 0.0)
      continue;
    const SparseOp a = annihilation(cutoffs, k);
    const SparseOp ad = a.adjoint();
    l += (s * (cx - kI * cp)) * a + (s * (cx + kI * cp)) * ad;
  }
  l.prune(Complex(0.0));
  return l;
}

SparseOp quadratic_hamiltonian(const std::vector<int>& cutoffs, const Matrix& k) {
  const auto dim = static_cast<Eigen::Index>(2 * cutoffs.size());
  require(k.rows() == dim && k.cols() == dim, ErrorCode::InvalidArgument, "K must be 2m×2m");
  const auto r = quadrature_ops(cutoffs);
  const auto n = space_dimension(cutoffs);
  SparseOp h(n, n);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      if (k(i, j) != 0.0)
        h += Complex(0.5 * k(i, j)) * SparseOp(r[i] * r[j]);
  h.prune(Complex(0.0));
  return h;
}

Moments moments(const FockState& state) {
  const auto r = quadrature_ops(state.cutoffs);
  const auto dim = static_cast<Eigen::Index>(r.size());
  require(state.rho.rows() == space_dimension(state.cutoffs), ErrorCode::InvalidArgument,
          "density matrix does not match the cutoffs");
  std::vector<CMatrix> r_rho;
  r_rho.reserve(r.size());
  for (const auto& op : r)
    r_rho.push_back(op * state.rho);

  Moments out{Vector(dim), Matrix(dim, dim)};
  for (Eigen::Index i = 0; i < dim; ++i)
    out.mean(i) = r_rho[i].trace().real();
  // Tr(R_i R_j ρ) from the nonzeros of R_i.
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i; j < dim; ++j) {
      Complex tr = 0.0;
      for (Eigen::Index col = 0; col < r[i].outerSize(); ++col)
        for (SparseOp::InnerIterator it(r[i], col); it; ++it)
          tr += it.value() * r_rho[j](it.col(), it.row());
      out.cov(i, j) = out.cov(j, i) = tr.real() - out.mean(i) * out.mean(j);
    }
  return out;
}

Moments moments(const FockVector& state) {
  const auto r = quadrature_ops(state.cutoffs);
  const auto dim = static_cast<Eigen::Index>(r.size());
  std::vector<CVector> r_psi;
  for (const auto& op : r)
    r_psi.push_back(op * state.psi);
  const double norm = state.psi.squaredNorm();
  Moments out{Vector(dim), Matrix(dim, dim)};
  for (Eigen::Index i = 0; i < dim; ++i)
    out.mean(i) = state.psi.dot(r_psi[i]).real() / norm;
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i; j < dim; ++j)
      out.cov(i, j) = out.cov(j, i) = r_psi[i].dot(r_psi[j]).real() / norm - out.mean(i) * out.mean(j);
  return out;
}

double trace(const FockState& state) { return state.rho.trace().real(); }

double hermiticity_defect(const FockState& state) {
  return (state.rho - state.rho.adjoint()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const FockState& state) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(state.rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

FockState evolve_lindblad(const FockState& state, const std::vector<SparseOp>& jumps,
                          const std::vector<double>& rates, double t, const SparseOp* hamiltonian,
                          const EvolveOptions& options) {
  require(jumps.size() == rates.size(), ErrorCode::InvalidArgument, "one rate per jump operator");
  require(std::isfinite(t) && t >= 0.0, ErrorCode::InvalidArgument, "evolution time must be non-negative");
  const auto n = state.dimension();
  SparseOp g(n, n);
  std::vector<std::pair<double, const SparseOp*>> active;
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    require(std::isfinite(rates[j]) && rates[j] >= 0.0, ErrorCode::InvalidArgument,
            "jump rates must be non-negative");
    require(jumps[j].rows() == n && jumps[j].cols() == n, ErrorCode::InvalidArgument,
            "jump operator dimension mismatch");
    if (rates[j] == 0.0)
      continue;
    active.emplace_back(rates[j], &jumps[j]);
    g -= Complex(0.5 * rates[j]) * SparseOp(jumps[j].adjoint() * jumps[j]);
  }
  if (hamiltonian)
    g -= kI * (*hamiltonian);
  if (t == 0.0 || (active.empty() && !hamiltonian))
    return state;

  State x(static_cast<std::size_t>(2 * n * n));
  as_matrix(x, n) = state.rho;
  // ρ stays Hermitian, so ρL† = (Lρ)† and one sparse product per jump suffices.
  CMatrix buffer(n, n), adj(n, n);
  auto system = [&](const State& in, State& out, double) {
    const auto rho = as_matrix(in, n);
    auto drho = as_matrix(out, n);
    buffer.noalias() = g * rho;
    drho = buffer + buffer.adjoint();
    for (const auto& [rate, l] : active) {
      buffer.noalias() = (*l) * rho;
      adj.noalias() = rate * buffer.adjoint();
      drho.noalias() += (*l) * adj;
    }
  };
  integrate(system, x, t, options);

  FockState out;
  out.cutoffs = state.cutoffs;
  out.rho = as_matrix(x, n);
  out.rho = (0.5 * (out.rho + out.rho.adjoint())).eval();
  out.leaked = state.leaked;
  out.leak_warning = state.leak_warning;
  return out;
}

FockState evolve_lindblad(const FockState& state, const dissipative::LindbladModel& model, double t,
                          const EvolveOptions& options) {
  require(state.cutoffs.size() == model.modes.size(), ErrorCode::ModeMismatch,
          "Fock state and model have different mode counts");
  std::vector<SparseOp> ops;
  for (const auto& c : model.jumps)
    ops.push_back(linear_operator(state.cutoffs, c));
  return evolve_lindblad(state, ops, model.rates, t, nullptr, options);
}

Matrix generator(const Matrix& s) {
  require(s.rows() == s.cols() && s.rows() % 2 == 0, ErrorCode::InvalidArgument, "S must be 2m×2m");
  const Eigen::MatrixXcd log_s = s.cast<Complex>().log();
  require(log_s.imag().cwiseAbs().maxCoeff() < 1e-9, ErrorCode::InvalidArgument,
          "symplectic matrix has no real logarithm");
  const Matrix omega = symplectic_form(static_cast<std::size_t>(s.rows() / 2));
  Matrix k = -omega * log_s.real();
  require((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-8, ErrorCode::NotSymplectic,
          "generator is not symmetric; S is not symplectic");
  return 0.5 * (k + k.transpose());
}

FockVector apply_symplectic(const FockVector& state, const Matrix& s, const EvolveOptions& options) {
  const SparseOp h = quadratic_hamiltonian(state.cutoffs, generator(s));
  const SparseOp minus_ih = -kI * h;
  const auto n = state.psi.size();
  State x(static_cast<std::size_t>(2 * n));
  Eigen::Map<CVector>(reinterpret_cast<Complex*>(x.data()), n) = state.psi;
  auto system = [&](const State& in, State& out, double) {
    Eigen::Map<const CVector> psi(reinterpret_cast<const Complex*>(in.data()), n);
    Eigen::Map<CVector>(reinterpret_cast<Complex*>(out.data()), n).noalias() = minus_ih * psi;
  };
  integrate(system, x, 1.0, options);
  return {state.cutoffs, Eigen::Map<const CVector>(reinterpret_cast<const Complex*>(x.data()), n)};
}

DarkState dark_state(const std::vector<int>& cutoffs, const std::vector<SparseOp>& jumps,
                     const std::vector<double>& rates) {
  require(jumps.size() == rates.size() && !jumps.empty(), ErrorCode::InvalidArgument,
          "dark state needs jump operators with rates");
  const auto n = space_dimension(cutoffs);
  SparseOp h(n, n);
  for (std::size_t j = 0; j < jumps.size(); ++j)
    h += Complex(rates[j]) * SparseOp(jumps[j].adjoint() * jumps[j]);
  const CMatrix dense(h);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(dense);
  DarkState out;
  out.residual = es.eigenvalues()(0);
  out.gap = n > 1 ? es.eigenvalues()(1) - es.eigenvalues()(0) : 0.0;
  out.state.cutoffs = cutoffs;
  const CVector psi = es.eigenvectors().col(0);
  out.state.rho = psi * psi.adjoint();
  return out;
}

DarkState dark_state(const dissipative::LindbladModel& model, int cutoff) {
  std::vector<int> cutoffs(model.modes.size(), cutoff);
  std::vector<SparseOp> ops;
  for (const auto& c : model.jumps)
    ops.push_back(linear_operator(cutoffs, c));
  return dark_state(cutoffs, ops, model.rates);
}

}  // namespace qlmi::fock
