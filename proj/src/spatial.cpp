#include "spectrain/spatial.hpp"

#include <cmath>
#include <numbers>

#include "spectrain/errors.hpp"
#include "spectrain/kernels.hpp"

namespace spectrain {

Image2D::Image2D(std::size_t h, std::size_t w, double fill)
    : height(h), width(w), values(h * w, fill) {}

Image2D::Image2D(std::size_t h, std::size_t w, std::vector<double> v)
    : height(h), width(w), values(std::move(v)) {
  if (values.size() != h * w) throw ArgumentError("Image2D: value count != H*W");
}

double Image2D::energy() const noexcept {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

namespace {

using cd = std::complex<double>;

// In-place 1-D DFT along a strided line. sign = -1 forward, +1 inverse.
void dft_line(cd* data, std::size_t n, std::size_t stride, int sign, std::vector<cd>& scratch,
              const std::vector<cd>& twiddle) {
  scratch.assign(n, cd{});
  for (std::size_t k = 0; k < n; ++k) {
    cd s{};
    for (std::size_t t = 0; t < n; ++t) {
      const cd tw = twiddle[(k * t) % n];
      s += data[t * stride] * (sign < 0 ? tw : std::conj(tw));
    }
    scratch[k] = s;
  }
  for (std::size_t k = 0; k < n; ++k) data[k * stride] = scratch[k];
}

std::vector<cd> twiddles(std::size_t n) {
  std::vector<cd> tw(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    tw[k] = {std::cos(a), std::sin(a)};
  }
  return tw;
}

void dft2_inplace(Spectrum2D& s, std::size_t h, std::size_t w, int sign) {
  std::vector<cd> scratch;
  const auto tw_w = twiddles(w);
  for (std::size_t r = 0; r < h; ++r) dft_line(s.data() + r * w, w, 1, sign, scratch, tw_w);
  const auto tw_h = twiddles(h);
  for (std::size_t c = 0; c < w; ++c) dft_line(s.data() + c, h, w, sign, scratch, tw_h);
}

void check_cutoff(double fc) {
  if (!(fc > 0.0 && fc <= 0.5)) throw ArgumentError("cutoff must be in (0, 0.5] cycles/pixel");
}

bool outside_disk(std::size_t u, std::size_t v, std::size_t h, std::size_t w, double fc) {
  const double fu = bin_frequency(u, h);
  const double fv = bin_frequency(v, w);
  return std::sqrt(fu * fu + fv * fv) > fc;
}

Image2D sample_grid(const Image2D& img, const std::vector<std::size_t>& rows,
                    const std::vector<std::size_t>& cols) {
  Image2D out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = img(rows[i], cols[j]);
  return out;
}

Image2D box_lowpass(const Image2D& img, double fc) {
  Spectrum2D s = dft2(img);
  for (std::size_t u = 0; u < img.height; ++u)
    for (std::size_t v = 0; v < img.width; ++v)
      if (std::abs(bin_frequency(u, img.height)) > fc || std::abs(bin_frequency(v, img.width)) > fc) {
        s[u * img.width + v] = 0.0;
      }
  return idft2_real(s, img.height, img.width);
}

Image2D prefilter(const Image2D& img, const LowpassSpec& f) {
  if (f.kind == LowpassKind::ideal_disk) {
    check_cutoff(f.param);
    return box_lowpass(img, f.param);
  }
  Image2D out(img.height, img.width);
  kernels::serial::gaussian_blur_channels(img.values, out.values, img.height, img.width, 1, f.param);
  return out;
}

}  // namespace

double bin_frequency(std::size_t u, std::size_t n) noexcept {
  const auto su = static_cast<double>(u);
  const auto sn = static_cast<double>(n);
  return (2 * u <= n ? su : su - sn) / sn;
}

Spectrum2D dft2(const Image2D& img) {
  Spectrum2D s(img.values.begin(), img.values.end());
  dft2_inplace(s, img.height, img.width, -1);
  return s;
}

Image2D idft2_real(const Spectrum2D& spec, std::size_t h, std::size_t w) {
  Spectrum2D s = spec;
  dft2_inplace(s, h, w, +1);
  Image2D out(h, w);
  const double inv = 1.0 / static_cast<double>(h * w);
  for (std::size_t i = 0; i < h * w; ++i) out.values[i] = s[i].real() * inv;
  return out;
}

Image2D lfc_crop(const Image2D& img, double cutoff) {
  check_cutoff(cutoff);
  Spectrum2D s = dft2(img);
  for (std::size_t u = 0; u < img.height; ++u)
    for (std::size_t v = 0; v < img.width; ++v)
      if (outside_disk(u, v, img.height, img.width, cutoff)) s[u * img.width + v] = 0.0;
  return idft2_real(s, img.height, img.width);
}

double lost_energy(const Image2D& img, double cutoff) {
  check_cutoff(cutoff);
  const Spectrum2D s = dft2(img);
  double e = 0.0;
  for (std::size_t u = 0; u < img.height; ++u)
    for (std::size_t v = 0; v < img.width; ++v)
      if (outside_disk(u, v, img.height, img.width, cutoff)) e += std::norm(s[u * img.width + v]);
  return e / static_cast<double>(img.height * img.width);
}

Image2D downsample(const Image2D& img, std::size_t d, std::optional<LowpassSpec> filter) {
  if (d < 1) throw ArgumentError("downsample: factor d must be >= 1");
  const Image2D filtered = filter ? prefilter(img, *filter) : img;
  std::vector<std::size_t> rows, cols;
  for (std::size_t r = 0; r < img.height; r += d) rows.push_back(r);
  for (std::size_t c = 0; c < img.width; c += d) cols.push_back(c);
  return sample_grid(filtered, rows, cols);
}

Image2D ChannelStack::channel(std::size_t c) const {
  Image2D img(height, width);
  for (std::size_t i = 0; i < height * width; ++i) img.values[i] = values[i * channels + c];
  return img;
}

LowpassSpec default_prefilter(std::size_t from, std::size_t to) {
  return LowpassSpec::gaussian(0.5 * static_cast<double>(from) / static_cast<double>(to));
}

std::vector<std::size_t> resize_positions(std::size_t from, std::size_t to) {
  std::vector<std::size_t> pos(to);
  for (std::size_t i = 0; i < to; ++i) pos[i] = i * from / to;
  return pos;
}

ChannelStack resize_stack(const ChannelStack& stack, std::size_t target,
                          std::optional<LowpassSpec> filter) {
  if (stack.height != stack.width) throw ArgumentError("resize_stack: input must be square");
  if (target < 1) throw ArgumentError("resize_stack: target must be >= 1");
  if (target > stack.height) throw UnsupportedError("resize_stack: upsampling is not supported");
  if (target == stack.height) return stack;

  const LowpassSpec f = filter.value_or(default_prefilter(stack.height, target));
  const auto pos = resize_positions(stack.height, target);
  std::vector<double> filtered(stack.values.size());
  if (f.kind == LowpassKind::gaussian) {
    kernels::gaussian_blur_channels(stack.values, filtered, stack.height, stack.width,
                                    stack.channels, f.param);
  } else {
    const auto nc = static_cast<std::ptrdiff_t>(stack.channels);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nc; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      const Image2D img = prefilter(stack.channel(uc), f);
      for (std::size_t i = 0; i < img.values.size(); ++i) filtered[i * stack.channels + uc] = img.values[i];
    }
  }

  ChannelStack out{target, target, stack.channels, std::vector<double>(target * target * stack.channels)};
  for (std::size_t i = 0; i < target; ++i)
    for (std::size_t j = 0; j < target; ++j) {
      const std::size_t src = (pos[i] * stack.width + pos[j]) * stack.channels;
      const std::size_t dst = (i * target + j) * stack.channels;
      std::copy_n(filtered.begin() + static_cast<std::ptrdiff_t>(src), stack.channels,
                  out.values.begin() + static_cast<std::ptrdiff_t>(dst));
    }
  return out;
}

namespace {

std::vector<double> class_mean(const std::vector<double>& values, std::size_t channels,
                               std::span<const std::size_t> set) {
  std::vector<double> m(channels, 0.0);
  for (std::size_t p : set)
    for (std::size_t c = 0; c < channels; ++c) m[c] += values[p * channels + c];
  for (double& v : m) v /= static_cast<double>(set.size());
  return m;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

std::pair<double, double> mean_separation(const ChannelStack& stack,
                                          std::span<const std::size_t> set_a,
                                          std::span<const std::size_t> set_b,
                                          const LowpassSpec& filter) {
  if (set_a.empty() || set_b.empty()) throw ArgumentError("mean_separation: empty class set");
  const std::size_t n = stack.height * stack.width;
  for (auto set : {set_a, set_b})
    for (std::size_t p : set)
      if (p >= n) throw ArgumentError("mean_separation: pixel index out of range");

  std::vector<double> filtered(stack.values.size());
  if (filter.kind == LowpassKind::gaussian) {
    kernels::gaussian_blur_channels(stack.values, filtered, stack.height, stack.width,
                                    stack.channels, filter.param);
  } else {
    for (std::size_t c = 0; c < stack.channels; ++c) {
      const Image2D img = lfc_crop(stack.channel(c), filter.param);
      for (std::size_t i = 0; i < n; ++i) filtered[i * stack.channels + c] = img.values[i];
    }
  }
  const double before = distance(class_mean(stack.values, stack.channels, set_a),
                                 class_mean(stack.values, stack.channels, set_b));
  const double after = distance(class_mean(filtered, stack.channels, set_a),
                                class_mean(filtered, stack.channels, set_b));
  return {before, after};
}

}  // namespace spectrain
