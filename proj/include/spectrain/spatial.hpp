#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace spectrain {

/// Single-channel H x W image, row-major.
struct Image2D {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Image2D() = default;
  Image2D(std::size_t h, std::size_t w, double fill = 0.0);
  Image2D(std::size_t h, std::size_t w, std::vector<double> v);

  double& operator()(std::size_t r, std::size_t c) noexcept { return values[r * width + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values[r * width + c]; }

  double energy() const noexcept;
};

enum class LowpassKind { ideal_disk, gaussian };

/// ideal_disk: keep frequencies up to `param` cycles/pixel, in (0, 0.5].
/// gaussian:   spatial kernel with standard deviation `param` pixels.
struct LowpassSpec {
  LowpassKind kind;
  double param;

  static LowpassSpec ideal_disk(double cutoff) { return {LowpassKind::ideal_disk, cutoff}; }
  static LowpassSpec gaussian(double sigma) { return {LowpassKind::gaussian, sigma}; }
};

using Spectrum2D = std::vector<std::complex<double>>;

/// Unnormalized forward 2-D DFT (row-major bins).
Spectrum2D dft2(const Image2D& img);
/// Inverse 2-D DFT with the 1/(HW) factor; returns the real part.
Image2D idft2_real(const Spectrum2D& spec, std::size_t h, std::size_t w);

/// Signed frequency of bin index `u` on an axis of length `n`, cycles/pixel:
/// the centered integer (u or u - n) divided by n.
double bin_frequency(std::size_t u, std::size_t n) noexcept;

/// Ideal circular low-pass: zero every DFT bin with radial frequency > f_c.
Image2D lfc_crop(const Image2D& img, double cutoff);

/// Energy of the bins removed by lfc_crop, normalized by 1/(HW) so that it
/// equals ||img - lfc_crop(img)||^2.
double lost_energy(const Image2D& img, double cutoff);

/// Prefilters with `filter` (if any) and keeps every d-th sample starting at
/// index 0, giving ceil(H/d) x ceil(W/d). The ideal prefilter is applied as
/// the separable Nyquist box |f_x|, |f_y| <= cutoff (periodic boundaries);
/// the Gaussian prefilter uses half-sample symmetric boundaries.
Image2D downsample(const Image2D& img, std::size_t d, std::optional<LowpassSpec> filter);

/// Stack of `channels` images of identical size, pixel-major (channel index
/// fastest), e.g. the principal-component images of a cube.
struct ChannelStack {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  Image2D channel(std::size_t c) const;
};

/// Default anti-aliasing prefilter for a reduction from `from` to `to` pixels:
/// Gaussian with sigma = 0.5 * from / to.
LowpassSpec default_prefilter(std::size_t from, std::size_t to);

/// Sample positions used when resizing an axis of length `from` to `to`:
/// floor(i * from / to). For integer factors this is a stride-d grid from 0.
std::vector<std::size_t> resize_positions(std::size_t from, std::size_t to);

/// Downsamples every channel of a square stack to target x target with the
/// same operator. target == current size is the identity; larger targets are
/// rejected with UnsupportedError.
ChannelStack resize_stack(const ChannelStack& stack, std::size_t target,
                          std::optional<LowpassSpec> filter = std::nullopt);

/// Class-mean separation ||m_a - m_b|| of a multi-channel image before and
/// after low-pass filtering each channel. Pixel sets are raster indices.
std::pair<double, double> mean_separation(const ChannelStack& stack,
                                          std::span<const std::size_t> set_a,
                                          std::span<const std::size_t> set_b,
                                          const LowpassSpec& filter);

}  // namespace spectrain
