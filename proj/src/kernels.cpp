#include "spectrain/kernels.hpp"

#include <cmath>
#include <vector>

#include "spectrain/errors.hpp"

namespace spectrain::kernels {

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("gaussian sigma must be > 0");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& t : taps) t /= total;
  return taps;
}

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) noexcept {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

namespace {

// Shared bodies; `parallel` selects the OpenMP pragma. Loop bodies are the
// same in both paths so results match bit-for-bit.

double gram_entry(const Matrix& x, std::span<const double> mean, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) s += (x(r, i) - mean[i]) * (x(r, j) - mean[j]);
  return s;
}

void project_row(const Matrix& x, std::span<const double> mean, const Matrix& basis,
                 std::size_t k, std::size_t r, std::vector<double>& centered, Matrix& y) {
  const std::size_t d = x.cols();
  for (std::size_t c = 0; c < d; ++c) centered[c] = x(r, c) - mean[c];
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += centered[c] * basis(c, j);
    y(r, j) = s;
  }
}

void blur_channel(std::span<const double> in, std::span<double> out, std::size_t h,
                  std::size_t w, std::size_t channels, std::size_t ch,
                  const std::vector<double>& taps) {
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto sh = static_cast<std::ptrdiff_t>(h);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  std::vector<double> tmp(h * w);
  for (std::ptrdiff_t r = 0; r < sh; ++r)
    for (std::ptrdiff_t c = 0; c < sw; ++c) {
      double s = 0.0;
      for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
        const auto cc = reflect_index(c + t, sw);
        s += taps[static_cast<std::size_t>(t + radius)] *
             in[static_cast<std::size_t>(r * sw + cc) * channels + ch];
      }
      tmp[static_cast<std::size_t>(r * sw + c)] = s;
    }
  for (std::ptrdiff_t r = 0; r < sh; ++r)
    for (std::ptrdiff_t c = 0; c < sw; ++c) {
      double s = 0.0;
      for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
        const auto rr = reflect_index(r + t, sh);
        s += taps[static_cast<std::size_t>(t + radius)] * tmp[static_cast<std::size_t>(rr * sw + c)];
      }
      out[static_cast<std::size_t>(r * sw + c) * channels + ch] = s;
    }
}

void check_blur_args(std::span<const double> in, std::span<double> out, std::size_t h,
                     std::size_t w, std::size_t channels) {
  if (in.size() != h * w * channels || out.size() != in.size()) {
    throw ArgumentError("gaussian_blur_channels: buffer size mismatch");
  }
}

}  // namespace

Matrix centered_gram(const Matrix& x, std::span<const double> mean) {
  const std::size_t d = x.cols();
  Matrix g(d, d);
  const auto n = static_cast<std::ptrdiff_t>(d);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    for (std::size_t j = static_cast<std::size_t>(i); j < d; ++j) {
      const double v = gram_entry(x, mean, static_cast<std::size_t>(i), j);
      g(static_cast<std::size_t>(i), j) = v;
      g(j, static_cast<std::size_t>(i)) = v;
    }
  return g;
}

Matrix project_rows(const Matrix& x, std::span<const double> mean, const Matrix& basis,
                    std::size_t k) {
  Matrix y(x.rows(), k);
  const auto m = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel
  {
    std::vector<double> centered(x.cols());
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < m; ++r)
      project_row(x, mean, basis, k, static_cast<std::size_t>(r), centered, y);
  }
  return y;
}

void gaussian_blur_channels(std::span<const double> in, std::span<double> out, std::size_t h,
                            std::size_t w, std::size_t channels, double sigma) {
  check_blur_args(in, out, h, w, channels);
  const auto taps = gaussian_taps(sigma);
  const auto nc = static_cast<std::ptrdiff_t>(channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ch = 0; ch < nc; ++ch)
    blur_channel(in, out, h, w, channels, static_cast<std::size_t>(ch), taps);
}

void linear_residuals(const Matrix& x, std::span<const double> w, double b,
                      std::span<const double> y, std::span<double> r) {
  const auto m = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    r[ui] = dot(x.row(ui), w) + b - y[ui];
  }
}

void scaled_transpose_product(const Matrix& x, std::span<const double> r, std::span<double> g) {
  const auto k = static_cast<std::ptrdiff_t>(x.cols());
  const double inv_m = 1.0 / static_cast<double>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, static_cast<std::size_t>(j)) * r[i];
    g[static_cast<std::size_t>(j)] = s * inv_m;
  }
}

namespace serial {

Matrix centered_gram(const Matrix& x, std::span<const double> mean) {
  const std::size_t d = x.cols();
  Matrix g(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      const double v = gram_entry(x, mean, i, j);
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

Matrix project_rows(const Matrix& x, std::span<const double> mean, const Matrix& basis,
                    std::size_t k) {
  Matrix y(x.rows(), k);
  std::vector<double> centered(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) project_row(x, mean, basis, k, r, centered, y);
  return y;
}

void gaussian_blur_channels(std::span<const double> in, std::span<double> out, std::size_t h,
                            std::size_t w, std::size_t channels, double sigma) {
  check_blur_args(in, out, h, w, channels);
  const auto taps = gaussian_taps(sigma);
  for (std::size_t ch = 0; ch < channels; ++ch) blur_channel(in, out, h, w, channels, ch, taps);
}

void linear_residuals(const Matrix& x, std::span<const double> w, double b,
                      std::span<const double> y, std::span<double> r) {
  for (std::size_t i = 0; i < x.rows(); ++i) r[i] = dot(x.row(i), w) + b - y[i];
}

void scaled_transpose_product(const Matrix& x, std::span<const double> r, std::span<double> g) {
  const double inv_m = 1.0 / static_cast<double>(x.rows());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, j) * r[i];
    g[j] = s * inv_m;
  }
}

}  // namespace serial
}  // namespace spectrain::kernels
