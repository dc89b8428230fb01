#pragma once

// Test-side helpers that do not go through the library: random symplectic
// matrices from exp(ΩH), random physical states from Williamson form, and a
// few closed-form oracles.

#include "qlmi/gaussian.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace support {

using qlmi::Matrix;
using qlmi::ModeId;
using qlmi::Vector;

inline Matrix omega(std::size_t n) {
  Matrix w = Matrix::Zero(2 * n, 2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    w(2 * k, 2 * k + 1) = 1.0;
    w(2 * k + 1, 2 * k) = -1.0;
  }
  return w;
}

inline double gauss(std::mt19937_64& rng, double sigma = 1.0) {
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// exp(ΩH) for a random symmetric H is symplectic.
inline Matrix random_symplectic(std::size_t n, std::mt19937_64& rng, double scale = 0.5) {
  Matrix h(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    for (Eigen::Index j = 0; j < h.cols(); ++j)
      h(i, j) = gauss(rng, scale);
  h = 0.5 * (h + h.transpose()).eval();
  Matrix m = omega(n) * h;
  return m.exp();
}

inline qlmi::GaussianState random_state(const std::vector<ModeId>& modes, std::mt19937_64& rng,
                                        double max_occupation = 2.0, double displacement = 1.5,
                                        double squeeze_scale = 0.5) {
  const std::size_t n = modes.size();
  Matrix d = Matrix::Zero(2 * n, 2 * n);
  for (std::size_t k = 0; k < n; ++k)
    d(2 * k, 2 * k) = d(2 * k + 1, 2 * k + 1) = 0.5 + uniform(rng, 0.0, max_occupation);
  const Matrix s = random_symplectic(n, rng, squeeze_scale);
  Matrix cov = s * d * s.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  Vector mean(2 * n);
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    mean(i) = gauss(rng, displacement);
  return qlmi::GaussianState(modes, mean, cov);
}

inline std::vector<ModeId> atoms(std::initializer_list<const char*> labels) {
  std::vector<ModeId> out;
  for (const char* l : labels)
    out.push_back({l, qlmi::ModeKind::Atomic});
  return out;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Single-mode Gaussian fidelity, vacuum covariance I/2:
// F = exp(−½ dᵀ(V1+V2)⁻¹d) / (√(Δ+δ) − √δ), Δ = det(V1+V2),
// δ = 4(det V1 − ¼)(det V2 − ¼).
inline double single_mode_fidelity(const Matrix& v1, const Vector& m1, const Matrix& v2, const Vector& m2) {
  const Matrix sum = v1 + v2;
  const double big = sum.determinant();
  const double small = std::max(0.0, 4.0 * (v1.determinant() - 0.25) * (v2.determinant() - 0.25));
  const Vector d = m2 - m1;
  return std::exp(-0.5 * d.dot(sum.inverse() * d)) / (std::sqrt(big + small) - std::sqrt(small));
}

}  // namespace support
