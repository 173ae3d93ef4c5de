#include "spectrain/cube.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

#include "spectrain/errors.hpp"
#include "spectrain/rng.hpp"

namespace spectrain {

using nlohmann::json;

HsiCube::HsiCube(std::size_t height, std::size_t width, std::size_t bands,
                 std::vector<float> data, std::optional<std::vector<double>> wavelengths)
    : height_(height),
      width_(width),
      bands_(bands),
      data_(std::move(data)),
      wavelengths_(std::move(wavelengths)) {
  if (height_ == 0 || width_ == 0 || bands_ == 0) {
    throw ArgumentError("cube dimensions must be positive");
  }
  if (data_.size() != height_ * width_ * bands_) {
    throw ArgumentError("cube data length " + std::to_string(data_.size()) +
                        " != H*W*D = " + std::to_string(height_ * width_ * bands_));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw DataError("cube contains non-finite values");
  }
  if (wavelengths_) {
    if (wavelengths_->size() != bands_) throw ArgumentError("wavelengths length != bands");
    for (std::size_t i = 1; i < wavelengths_->size(); ++i) {
      if (!((*wavelengths_)[i] > (*wavelengths_)[i - 1])) {
        throw ArgumentError("wavelengths must be strictly increasing");
      }
    }
  }
}

LabeledCube generate_synthetic(const SyntheticOptions& opt) {
  const std::size_t h = opt.height, w = opt.width, d = opt.bands;
  if (h < 1 || w < 1 || d < 1) throw ArgumentError("generate_synthetic: H, W, D must be >= 1");
  if (opt.classes < 1) throw ArgumentError("generate_synthetic: C must be >= 1");
  const std::size_t m = h * w;
  const auto c = static_cast<std::size_t>(opt.classes);
  if (c > m) throw ArgumentError("generate_synthetic: C must not exceed H*W");
  if (!(opt.rho > 0.0 && opt.rho < 1.0)) throw ArgumentError("generate_synthetic: rho must be in (0,1)");
  if (!(opt.noise_sigma >= 0.0)) throw ArgumentError("generate_synthetic: noise_sigma must be >= 0");
  if (opt.stripe_width > 0 && c * opt.stripe_width > w) {
    throw ArgumentError("generate_synthetic: stripes too wide for every class to appear");
  }

  Matrix gauss(d, d);
  {
    CounterRng rng(opt.seed, 1);
    for (double& v : gauss.data()) v = rng.normal();
  }
  const Matrix basis = orthonormalize_columns(gauss);

  std::vector<double> scale(d);
  for (std::size_t j = 0; j < d; ++j) scale[j] = std::sqrt(std::pow(opt.rho, static_cast<double>(j)));

  std::vector<int> labels(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (opt.stripe_width > 0) {
      labels[i] = static_cast<int>(((i % w) / opt.stripe_width) % c);
    } else {
      labels[i] = static_cast<int>(i * c / m);
    }
  }

  std::vector<float> data(m * d);
  CounterRng zrng(opt.seed, 2);
  CounterRng erng(opt.seed, 3);
  std::vector<double> coef(d);
  std::vector<double> spectrum(d);
  for (std::size_t i = 0; i < m; ++i) {
    zrng.seek(2 * i * d);
    erng.seek(2 * i * d);
    for (std::size_t j = 0; j < d; ++j) coef[j] = scale[j] * zrng.normal();
    const double shift = static_cast<double>(labels[i]);
    coef[0] += shift;
    if (d > 1) coef[1] += shift;
    for (std::size_t b = 0; b < d; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += basis(b, j) * coef[j];
      spectrum[b] = s;
    }
    for (std::size_t b = 0; b < d; ++b) {
      const double noise = erng.normal();
      data[i * d + b] = static_cast<float>(spectrum[b] + opt.noise_sigma * noise);
    }
  }

  std::vector<double> wl(d);
  for (std::size_t b = 0; b < d; ++b) {
    wl[b] = d == 1 ? 400.0 : 400.0 + 2100.0 * static_cast<double>(b) / static_cast<double>(d - 1);
  }
  return LabeledCube{HsiCube(h, w, d, std::move(data), std::move(wl)), std::move(labels),
                     opt.classes};
}

LabeledCube generate_synthetic(std::size_t h, std::size_t w, std::size_t d, int classes,
                               double rho, double noise_sigma, std::uint64_t seed) {
  SyntheticOptions opt;
  opt.height = h;
  opt.width = w;
  opt.bands = d;
  opt.classes = classes;
  opt.rho = rho;
  opt.noise_sigma = noise_sigma;
  opt.seed = seed;
  return generate_synthetic(opt);
}

Matrix flatten(const HsiCube& cube) {
  Matrix x(cube.pixels(), cube.bands());
  const auto& src = cube.data();
  for (std::size_t i = 0; i < src.size(); ++i) x.data()[i] = static_cast<double>(src[i]);
  return x;
}

HsiCube unflatten(const Matrix& x, std::size_t height, std::size_t width,
                  std::optional<std::vector<double>> wavelengths) {
  if (x.rows() != height * width) throw ArgumentError("unflatten: row count != H*W");
  std::vector<float> data(x.data().size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(x.data()[i]);
  return HsiCube(height, width, x.cols(), std::move(data), std::move(wavelengths));
}

namespace {

constexpr std::array<char, 4> kMagic{'H', 'S', 'C', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                              static_cast<char>((v >> 16) & 0xFF),
                              static_cast<char>((v >> 24) & 0xFF)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::size_t header_dim(const json& h, const char* key) {
  if (!h.contains(key) || !h[key].is_number_unsigned() || h[key].get<std::size_t>() == 0) {
    throw FormatError(std::string("dimension mismatch: header field '") + key +
                      "' missing or not a positive integer");
  }
  return h[key].get<std::size_t>();
}

}  // namespace

void save_cube(const HsiCube& cube, const std::filesystem::path& path) {
  json header = {{"h", cube.height()},
                 {"w", cube.width()},
                 {"d", cube.bands()},
                 {"dtype", "f32"},
                 {"layout", "bip"},
                 {"wavelengths", nullptr}};
  if (cube.wavelengths()) header["wavelengths"] = *cube.wavelengths();
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path.string() + "' for writing");
  os.write(kMagic.data(), 4);
  put_u32(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::vector<char> payload(cube.data().size() * 4);
  for (std::size_t i = 0; i < cube.data().size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &cube.data()[i], 4);
    for (int k = 0; k < 4; ++k) payload[i * 4 + k] = static_cast<char>((bits >> (8 * k)) & 0xFF);
  }
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!os) throw FormatError("write failed for '" + path.string() + "'");
}

HsiCube load_cube(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 8) throw FormatError("truncated: file shorter than the fixed preamble");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                  [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
    throw FormatError("bad magic");
  }
  const std::uint32_t len = get_u32(bytes.data() + 4);
  if (bytes.size() < 8ULL + len) throw FormatError("truncated: header JSON");

  json header;
  try {
    header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + len);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("header JSON: ") + e.what());
  }
  const std::size_t h = header_dim(header, "h");
  const std::size_t w = header_dim(header, "w");
  const std::size_t d = header_dim(header, "d");
  if (header.value("dtype", "") != "f32") throw FormatError("unsupported field 'dtype'");
  if (header.value("layout", "") != "bip") throw FormatError("unsupported field 'layout'");

  std::optional<std::vector<double>> wl;
  if (header.contains("wavelengths") && !header["wavelengths"].is_null()) {
    wl = header["wavelengths"].get<std::vector<double>>();
    if (wl->size() != d) throw FormatError("dimension mismatch: field 'wavelengths' length != d");
  }

  const std::size_t count = h * w * d;
  const std::size_t offset = 8 + len;
  if (bytes.size() < offset + count * 4) throw FormatError("truncated: payload");
  if (bytes.size() > offset + count * 4) {
    throw FormatError("dimension mismatch: payload longer than h*w*d");
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32(bytes.data() + offset + i * 4);
    std::memcpy(&data[i], &bits, 4);
  }
  try {
    return HsiCube(h, w, d, std::move(data), std::move(wl));
  } catch (const ArgumentError& e) {
    throw FormatError(e.what());
  }
}

void save_labels(const LabeledCube& lc, const std::filesystem::path& path) {
  json j = {{"h", lc.cube.height()},
            {"w", lc.cube.width()},
            {"num_classes", lc.num_classes},
            {"labels", lc.labels}};
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path.string() + "' for writing");
  os << j.dump() << '\n';
}

LabeledCube load_labeled(const std::filesystem::path& cube_path,
                         const std::filesystem::path& labels_path) {
  HsiCube cube = load_cube(cube_path);
  std::ifstream is(labels_path);
  if (!is) throw FormatError("cannot open '" + labels_path.string() + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("labels JSON: ") + e.what());
  }
  if (j.value("h", std::size_t{0}) != cube.height() || j.value("w", std::size_t{0}) != cube.width()) {
    throw FormatError("dimension mismatch: labels 'h'/'w' differ from the cube");
  }
  auto labels = j.at("labels").get<std::vector<int>>();
  const int c = j.at("num_classes").get<int>();
  if (labels.size() != cube.pixels()) throw FormatError("dimension mismatch: field 'labels' length");
  for (int l : labels) {
    if (l < 0 || l >= c) throw FormatError("field 'labels' has a value outside [0, num_classes)");
  }
  return LabeledCube{std::move(cube), std::move(labels), c};
}

}  // namespace spectrain
