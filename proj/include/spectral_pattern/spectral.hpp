#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spectral_pattern/errors.hpp"
#include "spectral_pattern/graph.hpp"
#include "spectral_pattern/matrix.hpp"

namespace spectral_pattern {

// Graph signals are n x c matrices (c = 1 for a scalar signal). Every
// operation here maps over channels independently.

/// Per-eigenvalue gains: entry l multiplies the l-th Fourier coefficient.
struct SpectralKernel {
  std::vector<double> gains;
};

/// Coefficients of sum_k theta_k L^k, k = 0 .. K-1.
struct PolynomialKernel {
  std::vector<double> theta;

  std::size_t order() const noexcept { return theta.size(); }
};

namespace detail {

inline void require_rows(const Matrix& signal, std::size_t n, const char* op) {
  if (signal.rows() != n)
    throw DimensionMismatch(std::string(op) + ": signal has " + std::to_string(signal.rows()) +
                            " rows, graph has " + std::to_string(n) + " vertices");
}

}  // namespace detail

/// Forward graph Fourier transform, X^T f.
inline Matrix gft(const Matrix& signal, const EigenSystem& eig) {
  detail::require_rows(signal, eig.n(), "gft");
  return matmul_tn(eig.eigenvectors, signal);
}

inline std::vector<double> gft(std::span<const double> signal, const EigenSystem& eig) {
  return gft(Matrix::column(signal), eig).values();
}

/// Inverse graph Fourier transform, X fhat.
inline Matrix igft(const Matrix& coefficients, const EigenSystem& eig) {
  detail::require_rows(coefficients, eig.n(), "igft");
  return matmul(eig.eigenvectors, coefficients);
}

inline std::vector<double> igft(std::span<const double> coefficients, const EigenSystem& eig) {
  return igft(Matrix::column(coefficients), eig).values();
}

/// Convolution as a point-wise product in the Fourier domain:
/// X diag(gains) X^T f.
inline Matrix spectral_convolve(const Matrix& signal, const SpectralKernel& kernel, const EigenSystem& eig) {
  if (kernel.gains.size() != eig.n())
    throw DimensionMismatch("spectral_convolve: kernel has " + std::to_string(kernel.gains.size()) +
                            " gains, graph has " + std::to_string(eig.n()) + " vertices");
  Matrix coefficients = gft(signal, eig);
  for (std::size_t l = 0; l < coefficients.rows(); ++l)
    for (double& v : coefficients.row(l)) v *= kernel.gains[l];
  return igft(coefficients, eig);
}

inline std::vector<double> spectral_convolve(std::span<const double> signal, const SpectralKernel& kernel,
                                             const EigenSystem& eig) {
  return spectral_convolve(Matrix::column(signal), kernel, eig).values();
}

/// gains[l] = sum_k theta_k lambda_l^k, evaluated by Horner's rule.
inline SpectralKernel kernel_from_polynomial(const PolynomialKernel& kernel, std::span<const double> eigenvalues) {
  if (kernel.order() < 1) throw DimensionMismatch("polynomial kernel needs at least one coefficient");
  SpectralKernel out;
  out.gains.reserve(eigenvalues.size());
  for (double lambda : eigenvalues) {
    double acc = 0.0;
    for (std::size_t k = kernel.order(); k-- > 0;) acc = acc * lambda + kernel.theta[k];
    out.gains.push_back(acc);
  }
  return out;
}

/// Successive powers L^k X for k = 0 .. order-1 by repeated products.
inline std::vector<Matrix> laplacian_powers(const Matrix& l, const Matrix& signal, std::size_t order) {
  detail::require_rows(signal, l.rows(), "laplacian_powers");
  std::vector<Matrix> powers;
  powers.reserve(order);
  if (order == 0) return powers;
  powers.push_back(signal);
  for (std::size_t k = 1; k < order; ++k) powers.push_back(matmul(l, powers.back()));
  return powers;
}

/// Localized convolution sum_k theta_k L^k f with no eigendecomposition.
inline Matrix polynomial_convolve(const Matrix& signal, const PolynomialKernel& kernel, const LaplacianMatrix& l) {
  if (kernel.order() < 1) throw DimensionMismatch("polynomial kernel needs at least one coefficient");
  detail::require_rows(signal, l.n(), "polynomial_convolve");
  Matrix power = signal;
  Matrix out = signal * kernel.theta[0];
  for (std::size_t k = 1; k < kernel.order(); ++k) {
    power = matmul(l.values, power);
    out += power * kernel.theta[k];
  }
  return out;
}

inline std::vector<double> polynomial_convolve(std::span<const double> signal, const PolynomialKernel& kernel,
                                               const LaplacianMatrix& l) {
  return polynomial_convolve(Matrix::column(signal), kernel, l).values();
}

}  // namespace spectral_pattern
