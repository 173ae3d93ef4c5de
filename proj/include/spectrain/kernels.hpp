#pragma once

// Data-parallel inner loops of the pipeline. Every kernel exists twice: an
// OpenMP version in `spectrain::kernels` and a plain serial reference in
// `spectrain::kernels::serial`. Each output element is produced by exactly
// one thread with the same summation order as the serial loop, so the two
// versions agree bit-for-bit at any thread count.

#include <cstddef>
#include <span>

#include "spectrain/linalg.hpp"

namespace spectrain::kernels {

/// Scatter matrix X~^T X~ of the rows of `x` centered by `mean` (D x D).
Matrix centered_gram(const Matrix& x, std::span<const double> mean);

/// (X - 1 mean^T) * basis[:, :k]  (M x k).
Matrix project_rows(const Matrix& x, std::span<const double> mean, const Matrix& basis,
                    std::size_t k);

/// Separable Gaussian blur of `channels` planes of size h x w stored
/// pixel-major (channel index fastest), half-sample symmetric boundaries.
void gaussian_blur_channels(std::span<const double> in, std::span<double> out, std::size_t h,
                            std::size_t w, std::size_t channels, double sigma);

/// Residuals r_i = <x_i, w> + b - y_i.
void linear_residuals(const Matrix& x, std::span<const double> w, double b,
                      std::span<const double> y, std::span<double> r);

/// g_j = (1/m) sum_i x_ij * r_i.
void scaled_transpose_product(const Matrix& x, std::span<const double> r, std::span<double> g);

namespace serial {

Matrix centered_gram(const Matrix& x, std::span<const double> mean);
Matrix project_rows(const Matrix& x, std::span<const double> mean, const Matrix& basis,
                    std::size_t k);
void gaussian_blur_channels(std::span<const double> in, std::span<double> out, std::size_t h,
                            std::size_t w, std::size_t channels, double sigma);
void linear_residuals(const Matrix& x, std::span<const double> w, double b,
                      std::span<const double> y, std::span<double> r);
void scaled_transpose_product(const Matrix& x, std::span<const double> r, std::span<double> g);

}  // namespace serial

/// Normalized 1-D Gaussian taps, radius ceil(4 sigma).
std::vector<double> gaussian_taps(double sigma);

/// Half-sample symmetric index reflection into [0, n).
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) noexcept;

}  // namespace spectrain::kernels
