#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "spectrain/linalg.hpp"

namespace spectrain {

/// Exact PCA of the spectral covariance C = X~^T X~ / (M - 1).
struct SpectralBasis {
  std::vector<double> mean;          // mu, length D
  Matrix eigvecs;                    // D x D, column j is e_{j+1}
  std::vector<double> eigvals;       // descending, clamped >= 0
  std::size_t sample_count = 0;      // M

  std::size_t dims() const noexcept { return mean.size(); }
};

SpectralBasis fit_pca(const Matrix& x);

/// Y = (X - 1 mu^T) E_k. Rows are independent.
Matrix project(const SpectralBasis& basis, const Matrix& x, std::size_t k);

/// X^ = 1 mu^T + Y E_k^T with k = Y.cols().
Matrix reconstruct(const SpectralBasis& basis, const Matrix& y);

/// ||X~ - X~ P_k||_F^2, the squared residual of the rank-k PCA reconstruction.
double reconstruction_error(const Matrix& x, const SpectralBasis& basis, std::size_t k);

/// sum_{i<=k} lambda_i / sum_i lambda_i; 1 when the total variance is zero.
double explained_variance_ratio(const SpectralBasis& basis, std::size_t k);
double explained_variance_ratio(std::span<const double> eigvals, std::size_t k);

/// Smallest k whose explained variance ratio reaches eta, eta in (0, 1].
std::size_t select_k(const SpectralBasis& basis, double eta);
std::size_t select_k(std::span<const double> eigvals, double eta);

/// D / k.
double compression_ratio(std::size_t d, std::size_t k);

/// Writes `<stem>.json` and `<stem>.bin`. The blob holds little-endian f64:
/// mu[D], then E column-major (D*D), then lambda[D].
void export_basis(const SpectralBasis& basis, const std::filesystem::path& stem);
SpectralBasis import_basis(const std::filesystem::path& stem);

}  // namespace spectrain
