#include "srlfd/rep/pca.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "srlfd/binary_io.hpp"
#include "srlfd/errors.hpp"

namespace srlfd::rep {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

std::vector<double> PcaModel::project(std::span<const double> x) const {
  if (x.size() != dim) throw DimensionError("pca project: expected length " + std::to_string(dim));
  std::vector<double> z(k, 0.0);
  for (std::size_t r = 0; r < dim; ++r) {
    const double c = x[r] - mean[r];
    for (std::size_t j = 0; j < k; ++j) z[j] += components[r * k + j] * c;
  }
  return z;
}

std::vector<double> PcaModel::reconstruct(std::span<const double> z) const {
  if (z.size() != k) throw DimensionError("pca reconstruct: expected length " + std::to_string(k));
  std::vector<double> x(mean);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t j = 0; j < k; ++j) x[r] += components[r * k + j] * z[j];
  return x;
}

double PcaModel::reconstruction_mse(std::span<const double> data) const {
  const std::size_t n = data.size() / dim;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.subspan(i * dim, dim);
    const auto back = reconstruct(project(row));
    for (std::size_t r = 0; r < dim; ++r) s += (back[r] - row[r]) * (back[r] - row[r]);
  }
  return s / static_cast<double>(n * dim);
}

PcaModel fit_pca(std::span<const double> data, std::size_t n, std::size_t dim, std::size_t k) {
  if (n == 0 || dim == 0 || data.size() != n * dim) throw DimensionError("fit_pca: data is not n x dim");
  if (k == 0 || k > dim) throw ConfigError("fit_pca: k must be in [1, dim]");
  if (k > n) throw ConfigError("fit_pca: need at least k samples");

  Eigen::Map<const RowMat> raw(data.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  const Eigen::RowVectorXd mu = raw.colwise().mean();
  const RowMat x = raw.rowwise() - mu;

  // Eigenpairs of the covariance, largest first: values as variances,
  // vectors as unit columns of length dim.
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  if (n < dim) {
    const Eigen::MatrixXd gram = x * x.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    values = es.eigenvalues().reverse() / static_cast<double>(n);
    vectors = x.transpose() * es.eigenvectors().rowwise().reverse();
  } else {
    const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    values = es.eigenvalues().reverse();
    vectors = es.eigenvectors().rowwise().reverse();
  }

  PcaModel m;
  m.dim = dim;
  m.k = k;
  m.mean.assign(mu.data(), mu.data() + dim);
  m.components.assign(dim * k, 0.0);
  m.variances.assign(k, 0.0);
  const double top = std::max(values(0), 0.0);
  const double tol = top * static_cast<double>(std::max(n, dim)) * std::numeric_limits<double>::epsilon() * 16;
  for (std::size_t j = 0; j < k; ++j) {
    const double lambda = values(static_cast<Eigen::Index>(j));
    if (!(lambda > tol)) break;
    Eigen::VectorXd v = vectors.col(static_cast<Eigen::Index>(j));
    v.normalize();
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    for (std::size_t r = 0; r < dim; ++r) m.components[r * k + j] = v(static_cast<Eigen::Index>(r));
    m.variances[j] = lambda;
    m.rank = j + 1;
  }
  return m;
}

PcaModel fit_pca(const std::vector<demos::DemoSet>& demos, std::size_t k, std::size_t max_samples,
                 std::uint64_t seed) {
  std::vector<const std::uint8_t*> frames;
  for (const auto& set : demos)
    for (const auto& t : set.trajectories())
      for (std::size_t i = 0; i < t.length(); ++i) frames.push_back(t.frame(i));
  if (frames.empty()) throw DomainError("fit_pca: no demonstration frames");
  if (frames.size() > max_samples) {
    Rng rng = make_rng(seed, {0x706361});
    std::shuffle(frames.begin(), frames.end(), rng);
    frames.resize(max_samples);
  }
  std::vector<double> data(frames.size() * sim::kImagePixels);
  for (std::size_t i = 0; i < frames.size(); ++i)
    for (std::size_t p = 0; p < sim::kImagePixels; ++p) data[i * sim::kImagePixels + p] = frames[i][p] / 255.0;
  return fit_pca(data, frames.size(), sim::kImagePixels, k);
}

void save_pca(const PcaModel& m, const std::string& path) {
  if (m.dim != sim::kImagePixels) throw DimensionError("save_pca: only 64x64 image models are persisted");
  BinaryWriter w(path);
  w.magic(kPcaMagic);
  w.put(static_cast<std::uint32_t>(m.k));
  w.bytes(m.mean.data(), m.mean.size() * sizeof(double));
  w.bytes(m.components.data(), m.components.size() * sizeof(double));
  w.bytes(m.variances.data(), m.variances.size() * sizeof(double));
  w.close();
}

PcaModel load_pca(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic(kPcaMagic);
  PcaModel m;
  m.dim = sim::kImagePixels;
  m.k = r.get<std::uint32_t>();
  if (m.k == 0 || m.k > m.dim) throw FormatError("'" + path + "': invalid component count");
  m.mean.resize(m.dim);
  m.components.resize(m.dim * m.k);
  m.variances.resize(m.k);
  if ((m.dim + m.dim * m.k + m.k) * sizeof(double) > r.remaining())
    throw TruncatedError("'" + path + "' is truncated");
  r.bytes(m.mean.data(), m.mean.size() * sizeof(double));
  r.bytes(m.components.data(), m.components.size() * sizeof(double));
  r.bytes(m.variances.data(), m.variances.size() * sizeof(double));
  if (!r.at_end()) throw FormatError("'" + path + "' has trailing bytes");
  m.rank = static_cast<std::size_t>(
      std::count_if(m.variances.begin(), m.variances.end(), [](double v) { return v > 0.0; }));
  return m;
}

}  // namespace srlfd::rep
