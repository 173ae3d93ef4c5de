#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spectrain/linalg.hpp"

namespace spectrain {

/// H x W x D reflectance datacube, band-interleaved-by-pixel: the D bands of
/// pixel (r, c) are contiguous at offset (r * W + c) * D.
class HsiCube {
 public:
  HsiCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<float> data,
          std::optional<std::vector<double>> wavelengths = std::nullopt);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  const std::vector<float>& data() const noexcept { return data_; }
  const std::optional<std::vector<double>>& wavelengths() const noexcept { return wavelengths_; }

  float at(std::size_t row, std::size_t col, std::size_t band) const noexcept {
    return data_[(row * width_ + col) * bands_ + band];
  }

  friend bool operator==(const HsiCube&, const HsiCube&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t bands_;
  std::vector<float> data_;
  std::optional<std::vector<double>> wavelengths_;
};

struct LabeledCube {
  HsiCube cube;
  std::vector<int> labels;  // H*W, raster order
  int num_classes;

  friend bool operator==(const LabeledCube&, const LabeledCube&) = default;
};

struct SyntheticOptions {
  std::size_t height = 40;
  std::size_t width = 40;
  std::size_t bands = 200;
  int classes = 2;
  double rho = 0.95;
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;
  /// 0: contiguous raster blocks, label(i) = floor(i * C / (H W)).
  /// n > 0: vertical stripes n pixels wide, label = (col / n) mod C.
  std::size_t stripe_width = 0;
};

/// Synthetic scene with eigen-spectrum lambda_j = rho^(j-1).
///
/// Draw order (reproducible by alternate implementations):
///   stream 1: D x D standard normals, row-major -> modified Gram-Schmidt on
///             columns gives the orthonormal basis e_1..e_D;
///   stream 2: z for pixel i, component j at counter 2*(i*D + j) (two uniforms
///             per normal);
///   stream 3: isotropic noise for pixel i, band j, same counter layout.
/// Class c has mean c * (e_1 + e_2). Spectra are stored as f32.
LabeledCube generate_synthetic(const SyntheticOptions& opt);

/// Convenience overload matching the positional signature.
LabeledCube generate_synthetic(std::size_t h, std::size_t w, std::size_t d, int classes,
                               double rho, double noise_sigma, std::uint64_t seed);

/// Rows are pixels in raster order, columns are bands (double precision).
Matrix flatten(const HsiCube& cube);
HsiCube unflatten(const Matrix& x, std::size_t height, std::size_t width,
                  std::optional<std::vector<double>> wavelengths = std::nullopt);

/// "HSC1" | u32 LE header length | JSON header | H*W*D f32 LE payload.
void save_cube(const HsiCube& cube, const std::filesystem::path& path);
HsiCube load_cube(const std::filesystem::path& path);

/// Labels sidecar: JSON {"h","w","num_classes","labels":[...]}.
void save_labels(const LabeledCube& lc, const std::filesystem::path& path);
LabeledCube load_labeled(const std::filesystem::path& cube_path,
                         const std::filesystem::path& labels_path);

}  // namespace spectrain
