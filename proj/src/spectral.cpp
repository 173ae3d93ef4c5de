#include "spectrain/spectral.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include <json.hpp>

#include "spectrain/errors.hpp"
#include "spectrain/kernels.hpp"

namespace spectrain {

namespace {

// Negative eigenvalues above this fraction of lambda_1 (in magnitude) are
// round-off and get clamped; anything larger means C was not PSD.
constexpr double kClampTolerance = 1e-10;

void check_k(std::size_t k, std::size_t d, const char* who) {
  if (k < 1 || k > d) {
    throw ArgumentError(std::string(who) + ": k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(d) + "]");
  }
}

}  // namespace

SpectralBasis fit_pca(const Matrix& x) {
  const std::size_t m = x.rows();
  const std::size_t d = x.cols();
  if (m < 2) throw ArgumentError("fit_pca: need at least 2 samples");
  if (d < 1) throw ArgumentError("fit_pca: need at least 1 band");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("fit_pca: non-finite input");
  }

  SpectralBasis basis;
  basis.sample_count = m;
  basis.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < d; ++c) basis.mean[c] += x(r, c);
  for (double& v : basis.mean) v /= static_cast<double>(m);

  Matrix cov = kernels::centered_gram(x, basis.mean);
  const double inv = 1.0 / static_cast<double>(m - 1);
  for (double& v : cov.data()) v *= inv;

  SymmetricEigen eig = jacobi_eigen(cov);
  const double scale = std::max(std::abs(eig.values.front()), std::numeric_limits<double>::min());
  for (double& l : eig.values) {
    if (l < 0.0) {
      if (l < -kClampTolerance * scale) {
        throw NumericError("fit_pca: covariance has a significantly negative eigenvalue");
      }
      l = 0.0;
    }
  }
  basis.eigvals = std::move(eig.values);
  basis.eigvecs = std::move(eig.vectors);
  return basis;
}

Matrix project(const SpectralBasis& basis, const Matrix& x, std::size_t k) {
  check_k(k, basis.dims(), "project");
  if (x.cols() != basis.dims()) throw ArgumentError("project: band count differs from basis");
  return kernels::project_rows(x, basis.mean, basis.eigvecs, k);
}

Matrix reconstruct(const SpectralBasis& basis, const Matrix& y) {
  const std::size_t d = basis.dims();
  const std::size_t k = y.cols();
  if (k < 1 || k > d) throw ArgumentError("reconstruct: column count outside [1, D]");
  Matrix out(y.rows(), d);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      double s = basis.mean[c];
      for (std::size_t j = 0; j < k; ++j) s += y(r, j) * basis.eigvecs(c, j);
      row[c] = s;
    }
  }
  return out;
}

double reconstruction_error(const Matrix& x, const SpectralBasis& basis, std::size_t k) {
  check_k(k, basis.dims(), "reconstruction_error");
  const Matrix xhat = reconstruct(basis, project(basis, x, k));
  double s = 0.0;
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    const double e = x.data()[i] - xhat.data()[i];
    s += e * e;
  }
  return s;
}

double explained_variance_ratio(std::span<const double> eigvals, std::size_t k) {
  check_k(k, eigvals.size(), "explained_variance_ratio");
  const double total = std::accumulate(eigvals.begin(), eigvals.end(), 0.0);
  if (total <= 0.0) return 1.0;
  const double head = std::accumulate(eigvals.begin(), eigvals.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  return std::min(1.0, head / total);
}

double explained_variance_ratio(const SpectralBasis& basis, std::size_t k) {
  return explained_variance_ratio(basis.eigvals, k);
}

std::size_t select_k(std::span<const double> eigvals, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw ArgumentError("select_k: eta must be in (0, 1]");
  const double total = std::accumulate(eigvals.begin(), eigvals.end(), 0.0);
  if (total <= 0.0) return 1;
  if (eta == 1.0) {
    // Smallest k capturing every nonzero eigenvalue; avoids summation round-off.
    std::size_t k = eigvals.size();
    while (k > 1 && eigvals[k - 1] == 0.0) --k;
    return k;
  }
  double head = 0.0;
  for (std::size_t k = 1; k <= eigvals.size(); ++k) {
    head += eigvals[k - 1];
    if (head / total >= eta) return k;
  }
  return eigvals.size();
}

std::size_t select_k(const SpectralBasis& basis, double eta) { return select_k(basis.eigvals, eta); }

double compression_ratio(std::size_t d, std::size_t k) {
  if (k < 1 || d < 1) throw ArgumentError("compression_ratio: D and k must be >= 1");
  return static_cast<double>(d) / static_cast<double>(k);
}

namespace {

void put_f64(std::vector<char>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void export_basis(const SpectralBasis& basis, const std::filesystem::path& stem) {
  const std::size_t d = basis.dims();
  std::vector<char> blob;
  blob.reserve((2 * d + d * d) * 8);
  for (double v : basis.mean) put_f64(blob, v);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t r = 0; r < d; ++r) put_f64(blob, basis.eigvecs(r, c));
  for (double v : basis.eigvals) put_f64(blob, v);

  auto bin_path = stem;
  bin_path += ".bin";
  auto json_path = stem;
  json_path += ".json";
  {
    std::ofstream os(bin_path, std::ios::binary);
    if (!os) throw FormatError("cannot open '" + bin_path.string() + "' for writing");
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  nlohmann::json j = {{"d", d},
                      {"sample_count", basis.sample_count},
                      {"blob", bin_path.filename().string()},
                      {"dtype", "f64le"},
                      {"layout", {{"mu", {0, d}}, {"eigvecs_colmajor", {d, d * d}}, {"eigvals", {d + d * d, d}}}},
                      {"eigvals", basis.eigvals}};
  std::ofstream os(json_path);
  os << j.dump(2) << '\n';
}

SpectralBasis import_basis(const std::filesystem::path& stem) {
  auto json_path = stem;
  json_path += ".json";
  auto bin_path = stem;
  bin_path += ".bin";
  std::ifstream js(json_path);
  if (!js) throw FormatError("cannot open '" + json_path.string() + "'");
  const auto j = nlohmann::json::parse(js);
  const std::size_t d = j.at("d").get<std::size_t>();
  std::ifstream is(bin_path, std::ios::binary);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() != (2 * d + d * d) * 8) throw FormatError("truncated: basis blob");
  SpectralBasis b;
  b.sample_count = j.at("sample_count").get<std::size_t>();
  b.mean.resize(d);
  b.eigvals.resize(d);
  b.eigvecs = Matrix(d, d);
  const unsigned char* p = bytes.data();
  for (std::size_t i = 0; i < d; ++i, p += 8) b.mean[i] = get_f64(p);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t r = 0; r < d; ++r, p += 8) b.eigvecs(r, c) = get_f64(p);
  for (std::size_t i = 0; i < d; ++i, p += 8) b.eigvals[i] = get_f64(p);
  return b;
}

}  // namespace spectrain
