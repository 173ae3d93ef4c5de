#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "spectrain/errors.hpp"
#include "spectrain/rng.hpp"
#include "spectrain/spatial.hpp"

using namespace spectrain;

namespace {

constexpr double kPi = std::numbers::pi;

Image2D random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  CounterRng r(seed, 3);
  Image2D img(h, w);
  for (double& v : img.values) v = r.normal();
  return img;
}

Image2D cosine_image(std::size_t h, std::size_t w, double fu, double fv, double amp) {
  Image2D img(h, w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      img(r, c) = amp * std::cos(2 * kPi * (fu * static_cast<double>(r) + fv * static_cast<double>(c)));
  return img;
}

// Direct O(N^4) DFT; the oracle shares no code with the library transform.
std::vector<std::complex<double>> brute_dft(const Image2D& img) {
  const std::size_t h = img.height, w = img.width;
  std::vector<std::complex<double>> out(h * w);
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) {
      std::complex<double> s{};
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
          const double a = -2 * kPi * (static_cast<double>(u * r) / h + static_cast<double>(v * c) / w);
          s += img(r, c) * std::complex<double>(std::cos(a), std::sin(a));
        }
      out[u * w + v] = s;
    }
  return out;
}

double centered(std::size_t u, std::size_t n) {
  const auto iu = static_cast<long>(u), in = static_cast<long>(n);
  return static_cast<double>(2 * iu <= in ? iu : iu - in) / static_cast<double>(n);
}

double diff_energy(const Image2D& a, const Image2D& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  return s;
}

}  // namespace

TEST(Dft, MatchesBruteForce) {
  const Image2D img = random_image(6, 5, 1);
  const auto ours = dft2(img);
  const auto oracle = brute_dft(img);
  for (std::size_t i = 0; i < ours.size(); ++i) EXPECT_LT(std::abs(ours[i] - oracle[i]), 1e-10);
  const Image2D back = idft2_real(ours, 6, 5);
  for (std::size_t i = 0; i < img.values.size(); ++i) EXPECT_NEAR(back.values[i], img.values[i], 1e-12);
}

TEST(LfcCrop, ConstantImageUnchanged) {
  const Image2D img(8, 8, 3.25);
  for (double fc : {0.01, 0.2, 0.5}) {
    const Image2D out = lfc_crop(img, fc);
    for (double v : out.values) EXPECT_NEAR(v, 3.25, 1e-12);
    EXPECT_NEAR(lost_energy(img, fc), 0.0, 1e-12);
  }
}

TEST(LfcCrop, RemovesHighFrequencySinusoid) {
  const double amp = 2.0;
  const Image2D img = cosine_image(20, 20, 0.4, 0.0, amp);
  const Image2D out = lfc_crop(img, 0.2);
  for (double v : out.values) EXPECT_LE(std::abs(v), 1e-8 * amp);
  EXPECT_NEAR(lost_energy(img, 0.2), img.energy(), 1e-9 * img.energy());
}

TEST(LfcCrop, EnergyEqualsInDiskSpectralEnergy) {
  const Image2D img = random_image(32, 32, 2);
  const double fc = 0.23;
  const auto spec = brute_dft(img);
  double kept = 0.0;
  for (std::size_t u = 0; u < 32; ++u)
    for (std::size_t v = 0; v < 32; ++v) {
      const double f = std::hypot(centered(u, 32), centered(v, 32));
      if (f <= fc) kept += std::norm(spec[u * 32 + v]);
    }
  kept /= 32.0 * 32.0;
  const double out = lfc_crop(img, fc).energy();
  EXPECT_NEAR(out, kept, 1e-9 * kept);
}

TEST(LfcCrop, CutoffOutOfRange) {
  const Image2D img(4, 4, 1.0);
  EXPECT_THROW(lfc_crop(img, 0.0), ArgumentError);
  EXPECT_THROW(lfc_crop(img, 0.6), ArgumentError);
  EXPECT_THROW(lost_energy(img, -0.1), ArgumentError);
}

TEST(LostEnergy, EqualsResidualEnergy) {
  const Image2D img = random_image(16, 12, 3);
  const double lost = lost_energy(img, 0.3);
  EXPECT_NEAR(lost, diff_energy(img, lfc_crop(img, 0.3)), 1e-9 * lost);
}

TEST(LostEnergy, PartitionOnRandomImages) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Image2D img = random_image(12, 12, 10 + s);
    const double fc = 0.05 + 0.02 * static_cast<double>(s);
    const double total = img.energy();
    EXPECT_NEAR(lost_energy(img, fc) + lfc_crop(img, fc).energy(), total, 1e-9 * total);
  }
}

TEST(LowPass, ContractsPairwiseDistances) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Image2D f = random_image(10, 14, 100 + s), g = random_image(10, 14, 200 + s);
    const double fc = 0.1 + 0.015 * static_cast<double>(s);
    EXPECT_LE(std::sqrt(diff_energy(lfc_crop(f, fc), lfc_crop(g, fc))), std::sqrt(diff_energy(f, g)) + 1e-9);
  }
}

TEST(Downsample, UnitFactorIdentity) {
  const Image2D img = random_image(9, 7, 4);
  const Image2D a = downsample(img, 1, LowpassSpec::ideal_disk(0.5));
  for (std::size_t i = 0; i < img.values.size(); ++i) EXPECT_NEAR(a.values[i], img.values[i], 1e-9);
  EXPECT_EQ(downsample(img, 1, std::nullopt).values, img.values);
}

TEST(Downsample, ConstantImageStaysConstant) {
  const Image2D img(11, 9, -1.5);
  for (std::size_t d : {2u, 3u, 4u}) {
    for (const auto& f : {LowpassSpec::gaussian(0.5 * static_cast<double>(d)), LowpassSpec::ideal_disk(0.5 / static_cast<double>(d))}) {
      const Image2D out = downsample(img, d, f);
      EXPECT_EQ(out.height, (11 + d - 1) / d);
      EXPECT_EQ(out.width, (9 + d - 1) / d);
      for (double v : out.values) EXPECT_NEAR(v, -1.5, 1e-12);
    }
  }
}

TEST(Downsample, FactorBelowOneRejected) {
  EXPECT_THROW(downsample(Image2D(4, 4), 0, std::nullopt), ArgumentError);
}

TEST(Downsample, BandLimitedSincReconstruction) {
  const std::size_t n = 32, d = 2, m = n / d;
  CounterRng r(5, 5);
  Image2D img(n, n);
  // Random cosines on integer bins strictly below 0.5 / d cycles/pixel.
  for (int t = 0; t < 12; ++t) {
    const double fu = static_cast<double>(static_cast<int>(r.below(15)) - 7) / n;
    const double fv = static_cast<double>(static_cast<int>(r.below(15)) - 7) / n;
    const double amp = r.normal(), phase = 2 * kPi * r.uniform();
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) img(y, x) += amp * std::cos(2 * kPi * (fu * y + fv * x) + phase);
  }
  const Image2D s = downsample(img, d, LowpassSpec::ideal_disk(0.5 / d));
  ASSERT_EQ(s.height, m);
  // Periodic band-limited interpolation written as an explicit trigonometric sum.
  std::vector<std::complex<double>> coef(15 * 15);
  for (int ku = -7; ku <= 7; ++ku)
    for (int kv = -7; kv <= 7; ++kv) {
      std::complex<double> c{};
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) {
          const double ang = -2 * kPi * (ku * static_cast<double>(a) + kv * static_cast<double>(b)) / m;
          c += s(a, b) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      coef[static_cast<std::size_t>((ku + 7) * 15 + kv + 7)] = c / static_cast<double>(m * m);
    }
  double err = 0.0, ref = 0.0;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      std::complex<double> v{};
      for (int ku = -7; ku <= 7; ++ku)
        for (int kv = -7; kv <= 7; ++kv) {
          const double ang = 2 * kPi * (ku * static_cast<double>(y) + kv * static_cast<double>(x)) / n;
          v += coef[static_cast<std::size_t>((ku + 7) * 15 + kv + 7)] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      err += (v.real() - img(y, x)) * (v.real() - img(y, x));
      ref += img(y, x) * img(y, x);
    }
  EXPECT_LE(std::sqrt(err / ref), 1e-6);
}

TEST(ResizeStack, SameSizeIdentity) {
  ChannelStack s{6, 6, 2, random_image(6, 12, 6).values};
  EXPECT_EQ(resize_stack(s, 6).values, s.values);
}

TEST(ResizeStack, SingleChannelMatchesDownsample) {
  const Image2D img = random_image(12, 12, 7);
  ChannelStack s{12, 12, 1, img.values};
  const Image2D ref = downsample(img, 3, LowpassSpec::gaussian(1.5));
  EXPECT_EQ(resize_stack(s, 4, LowpassSpec::gaussian(1.5)).values, ref.values);
  const Image2D ref2 = downsample(img, 2, LowpassSpec::ideal_disk(0.25));
  const auto out2 = resize_stack(s, 6, LowpassSpec::ideal_disk(0.25));
  for (std::size_t i = 0; i < ref2.values.size(); ++i) EXPECT_NEAR(out2.values[i], ref2.values[i], 1e-12);
}

TEST(ResizeStack, QuarterPixelCountAtHalfSize) {
  ChannelStack s{50, 50, 3, random_image(50, 150, 8).values};
  const auto out = resize_stack(s, 25);
  EXPECT_EQ(out.height * out.width * 4, s.height * s.width);
  EXPECT_EQ(out.channels, 3u);
}

TEST(ResizeStack, CommutesWithChannelSelection) {
  ChannelStack s{10, 10, 3, random_image(10, 30, 9).values};
  const auto all = resize_stack(s, 7);
  for (std::size_t c = 0; c < 3; ++c) {
    ChannelStack one{10, 10, 1, s.channel(c).values};
    EXPECT_EQ(resize_stack(one, 7).values, all.channel(c).values);
  }
}

TEST(ResizeStack, UpsamplingUnsupported) {
  ChannelStack s{4, 4, 1, std::vector<double>(16, 0.0)};
  EXPECT_THROW(resize_stack(s, 5), UnsupportedError);
}

TEST(MeanSeparation, InteriorOfUniformRegionsUnchanged) {
  const std::size_t n = 24;
  ChannelStack s{n, n, 2, std::vector<double>(n * n * 2)};
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const bool right = c >= n / 2;
      s.values[(r * n + c) * 2] = right ? 4.0 : 1.0;
      s.values[(r * n + c) * 2 + 1] = right ? -2.0 : 0.5;
    }
  std::vector<std::size_t> a, b;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 6; ++c) a.push_back(r * n + c);
    for (std::size_t c = 18; c < n; ++c) b.push_back(r * n + c);
  }
  const auto [before, after] = mean_separation(s, a, b, LowpassSpec::gaussian(1.0));
  EXPECT_NEAR(after, before, 1e-9);
}

TEST(MeanSeparation, HalfPlanesMixUnderBlur) {
  const std::size_t n = 32;
  ChannelStack s{n, n, 1, std::vector<double>(n * n)};
  std::vector<std::size_t> a, b;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      s.values[r * n + c] = c >= n / 2 ? 1.0 : 0.0;
      (c >= n / 2 ? b : a).push_back(r * n + c);
    }
  const auto [before, after] = mean_separation(s, a, b, LowpassSpec::gaussian(2.0));
  EXPECT_DOUBLE_EQ(before, 1.0);
  // Oracle: 1-D direct convolution along columns with mirrored edges.
  const int rad = 8;
  std::vector<double> g(2 * rad + 1);
  double norm = 0.0;
  for (int t = -rad; t <= rad; ++t) norm += g[static_cast<std::size_t>(t + rad)] = std::exp(-t * t / 8.0);
  double mean_a = 0.0, mean_b = 0.0;
  for (int c = 0; c < static_cast<int>(n); ++c) {
    double v = 0.0;
    for (int t = -rad; t <= rad; ++t) {
      int j = c + t;
      while (j < 0 || j >= static_cast<int>(n)) j = j < 0 ? -j - 1 : 2 * static_cast<int>(n) - j - 1;
      v += g[static_cast<std::size_t>(t + rad)] / norm * (j >= static_cast<int>(n) / 2 ? 1.0 : 0.0);
    }
    (c >= static_cast<int>(n) / 2 ? mean_b : mean_a) += v / (n / 2);
  }
  EXPECT_NEAR(after, mean_b - mean_a, 1e-12);
  EXPECT_LT(after, before);
}

TEST(MeanSeparation, IdenticalClassesZero) {
  ChannelStack s{8, 8, 2, random_image(8, 16, 10).values};
  std::vector<std::size_t> a{1, 5, 9, 30};
  const auto [before, after] = mean_separation(s, a, a, LowpassSpec::ideal_disk(0.2));
  EXPECT_EQ(before, 0.0);
  EXPECT_NEAR(after, 0.0, 1e-15);
  EXPECT_THROW(mean_separation(s, {}, a, LowpassSpec::ideal_disk(0.2)), ArgumentError);
}
