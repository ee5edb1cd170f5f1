#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "srlfd/errors.hpp"
#include "srlfd/grad/checkpoint.hpp"
#include "srlfd/rep/autoencoder.hpp"

using namespace srlfd;
using namespace srlfd::rep;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("srlfd_rep_" + name)).string();
}

const std::vector<demos::DemoSet>& noisy_demos() {
  static const std::vector<demos::DemoSet> d = [] {
    demos::DemoConfig cfg;
    cfg.instances = 2;
    cfg.trajectories = 3;
    cfg.horizon = 20;
    cfg.seed = 5;
    cfg.env = sim::with_variant(cfg.env, sim::Variant::kNoisy);
    return demos::generate_demos(cfg);
  }();
  return d;
}

sim::Image random_image(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  sim::Image img;
  for (double& v : img.pixels) v = u(rng);
  return img;
}

sim::Observation obs_of(const sim::Image& img) { return {img, {}}; }

std::vector<double> frames_matrix(std::size_t n, std::vector<const std::uint8_t*>* keep = nullptr) {
  std::vector<double> data;
  std::size_t taken = 0;
  for (const auto& s : noisy_demos())
    for (const auto& t : s.trajectories())
      for (std::size_t i = 0; i < t.length() && taken < n; i += 2, ++taken) {
        if (keep) keep->push_back(t.frame(i));
        for (std::size_t p = 0; p < sim::kImagePixels; ++p) data.push_back(t.frame(i)[p] / 255.0);
      }
  REQUIRE(taken == n);
  return data;
}

}  // namespace

TEST_CASE("phi network: shapes, parameter count, flatten size") {
  Rng rng(1);
  grad::ParameterSet params;
  init_phi(params, 8, rng);
  std::size_t conv = 0;
  for (const auto& p : params)
    if (p.name.find("conv") != std::string::npos) conv += p.value.size();
  CHECK(conv == 3 * 16 + 9 * (1 * 16 + 16 * 16 + 16 * 16));
  CHECK(conv == (9 * 1 * 16 + 16) + 2 * (9 * 16 * 16 + 16));
  CHECK(phi_latent(params) == 8);

  grad::Graph g;
  auto x = g.input(grad::Tensor({2, 64, 64, 1}, 0.3));
  CHECK(g.value(phi_features(g, params, x)).shape() == grad::Shape{2, 48400});
  CHECK(g.value(phi_forward(g, params, x)).shape() == grad::Shape{2, 8});
  CHECK_THROWS_AS(init_phi(params, 0, rng), ConfigError);
}

TEST_CASE("network encoders: frozen, bounded, seeded, same topology") {
  Rng rng(2);
  const NormStats norm{0.8, 0.3};
  const NetworkEncoder a = make_random_encoder(8, 11, norm);
  const NetworkEncoder b = make_random_encoder(8, 11, norm);
  const NetworkEncoder c = make_random_encoder(8, 12, norm);
  const sim::Image img = random_image(rng);
  CHECK(a.encode_image(img) == a.encode_image(img));
  CHECK(a.encode_image(img) == b.encode_image(img));
  CHECK(a.encode_image(img) != c.encode_image(img));
  CHECK(a.content_hash() == b.content_hash());
  CHECK(a.content_hash() != c.content_hash());

  grad::ParameterSet p;
  init_phi(p, 8, rng);
  for (auto& prm : p)
    for (double& v : prm.value.data()) v *= 40.0;  // saturate
  const NetworkEncoder big(RepKind::kSrlfd, std::move(p), norm);
  for (double v : big.encode_image(img)) CHECK(std::abs(v) <= 1.7159);

  CHECK(phi_shapes(a.params()) == phi_shapes(big.params()));
  AutoencoderConfig ac;
  ac.steps = 1;
  ac.batch = 2;
  const auto ae = train_autoencoder(noisy_demos(), norm, ac);
  CHECK(phi_shapes(ae.encoder.params()) == phi_shapes(a.params()));
  for (const auto& prm : ae.encoder.params()) CHECK(prm.name.rfind("phi.", 0) == 0);
}

TEST_CASE("encode_frames agrees with encode on dequantized images to rounding") {
  const NetworkEncoder enc = make_random_encoder(4, 3, {0.7, 0.25});
  std::vector<const std::uint8_t*> frames;
  for (std::size_t i = 0; i < 70; ++i) frames.push_back(noisy_demos()[0].trajectories()[i % 3].frame(i % 20));
  const auto rows = enc.encode_frames(frames);
  REQUIRE(rows.size() == 70);
  // Batched and single-row products may round differently.
  for (std::size_t i : {0, 33, 69}) {
    const auto one = enc.encode_image(sim::dequantize(frames[i]));
    for (std::size_t k = 0; k < one.size(); ++k) CHECK(rows[i][k] == doctest::Approx(one[k]).epsilon(1e-12));
  }
}

TEST_CASE("normalization enters only through (I - mu) / sigma") {
  Rng rng(4);
  grad::ParameterSet p;
  init_phi(p, 6, rng);
  const NormStats n1{0.5, 0.2}, n2{0.1, 0.05};
  const NetworkEncoder e1(RepKind::kSrlfd, p, n1), e2(RepKind::kSrlfd, p, n2);
  const sim::Image img = random_image(rng);
  sim::Image moved;
  for (std::size_t i = 0; i < sim::kImagePixels; ++i)
    moved.pixels[i] = (img.pixels[i] - n1.mu) / n1.sigma * n2.sigma + n2.mu;
  const auto a = e1.encode_image(img), b = e2.encode_image(moved);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("represent_pair: zero delta, antisymmetry, recomputation") {
  Rng rng(5);
  const NetworkEncoder enc = make_random_encoder(8, 1, {0.9, 0.2});
  const auto i1 = obs_of(random_image(rng)), i2 = obs_of(random_image(rng));
  const Representation same = represent_pair(enc, i1, i1);
  for (double v : same.delta) CHECK(v == 0.0);
  CHECK(same.dim() == 16);

  const Representation ab = represent_pair(enc, i1, i2), ba = represent_pair(enc, i2, i1);
  const auto e1 = enc.encode(i1), e2 = enc.encode(i2);
  CHECK(ab.phi == e2);
  CHECK(ba.phi == e1);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(ab.delta[k] == -ba.delta[k]);
    CHECK(ab.delta[k] == e2[k] - e1[k]);
  }
  const auto flat = ab.flat();
  CHECK(flat.size() == 16);
  CHECK(flat[8] == ab.delta[0]);
}

TEST_CASE("pca: exact affine subspace is reconstructed without error") {
  Rng rng(6);
  std::normal_distribution<double> n01;
  const std::size_t dim = 30, n = 40, k = 3;
  std::vector<std::vector<double>> basis(k, std::vector<double>(dim));
  for (auto& b : basis)
    for (double& v : b) v = n01(rng);
  std::vector<double> data;
  for (std::size_t i = 0; i < n; ++i) {
    const double c[3] = {n01(rng), n01(rng), n01(rng)};
    for (std::size_t r = 0; r < dim; ++r) data.push_back(1.5 + c[0] * basis[0][r] + c[1] * basis[1][r] + c[2] * basis[2][r]);
  }
  const PcaModel m = fit_pca(data, n, dim, k);
  CHECK(m.reconstruction_mse(data) < 1e-24);

  // Asking for more components than the rank zero-pads the rest.
  const PcaModel wide = fit_pca(data, n, dim, 6);
  CHECK(wide.rank == 3);
  for (std::size_t r = 0; r < dim; ++r) CHECK(wide.component(r, 4) == 0.0);
  CHECK_THROWS_AS(fit_pca(data, n, dim, 41), ConfigError);
  CHECK_THROWS_AS(fit_pca(data, n, dim + 1, 2), DimensionError);
}

TEST_CASE("pca: matches an SVD oracle on 50 demo images") {
  const std::size_t n = 50;
  const std::vector<double> data = frames_matrix(n);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMat x = Eigen::Map<const RowMat>(data.data(), n, sim::kImagePixels);
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const RowMat xc = x.rowwise() - mu;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinV);

  for (std::size_t k : {8, 24}) {
    const PcaModel m = fit_pca(data, n, sim::kImagePixels, k);
    Eigen::MatrixXd v = svd.matrixV().leftCols(k);
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      Eigen::Index arg;
      v.col(j).cwiseAbs().maxCoeff(&arg);
      if (v(arg, j) < 0) v.col(j) *= -1.0;
      CHECK(m.variances[j] == doctest::Approx(svd.singularValues()(j) * svd.singularValues()(j) / n).epsilon(1e-9));
    }
    double worst_proj = 0.0, worst_rec = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::span<const double> row(data.data() + i * sim::kImagePixels, sim::kImagePixels);
      const auto z = m.project(row);
      const Eigen::VectorXd zo = v.transpose() * xc.row(i).transpose();
      const auto rec = m.reconstruct(z);
      const Eigen::VectorXd reco = mu.transpose() + v * zo;
      for (std::size_t j = 0; j < k; ++j) worst_proj = std::max(worst_proj, std::abs(z[j] - zo(j)));
      for (std::size_t p = 0; p < sim::kImagePixels; ++p) worst_rec = std::max(worst_rec, std::abs(rec[p] - reco(p)));
    }
    CHECK(worst_proj < 1e-8);
    CHECK(worst_rec < 1e-8);
  }
}

TEST_CASE("pca: orthonormal, ordered, sign convention, monotone in k, optimal") {
  const std::size_t n = 60;
  const std::vector<double> data = frames_matrix(n);
  const PcaModel m = fit_pca(data, n, sim::kImagePixels, 24);
  for (std::size_t a = 0; a < 24; ++a) {
    double amax = 0.0, sign = 0.0;
    for (std::size_t r = 0; r < sim::kImagePixels; ++r)
      if (std::abs(m.component(r, a)) > amax) {
        amax = std::abs(m.component(r, a));
        sign = m.component(r, a);
      }
    CHECK(sign > 0.0);
    if (a > 0) CHECK(m.variances[a] <= m.variances[a - 1]);
    for (std::size_t b = 0; b <= a; ++b) {
      double dot = 0.0;
      for (std::size_t r = 0; r < sim::kImagePixels; ++r) dot += m.component(r, a) * m.component(r, b);
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-9);
    }
  }

  double prev = INFINITY;
  for (std::size_t k : {1, 2, 4, 8, 16, 24}) {
    const double err = fit_pca(data, n, sim::kImagePixels, k).reconstruction_mse(data);
    CHECK(err <= prev);
    prev = err;
  }

  // Eckart-Young spot check against random orthonormal 8-frames.
  const PcaModel m8 = fit_pca(data, n, sim::kImagePixels, 8);
  const double best = m8.reconstruction_mse(data);
  Rng rng(9);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd g(sim::kImagePixels, 8);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n01(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() * Eigen::MatrixXd::Identity(sim::kImagePixels, 8);
    PcaModel other = m8;
    for (std::size_t r = 0; r < sim::kImagePixels; ++r)
      for (std::size_t j = 0; j < 8; ++j) other.components[r * 8 + j] = q(r, j);
    CHECK(best <= other.reconstruction_mse(data));
  }
}

TEST_CASE("pca: Gram and covariance routes agree") {
  Rng rng(10);
  std::normal_distribution<double> n01;
  const std::size_t dim = 12;
  std::vector<double> data(30 * dim);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = n01(rng) * (1.0 + (i % dim));
  const PcaModel cov = fit_pca(data, 30, dim, 4);       // n >= dim
  const PcaModel gram = fit_pca(std::span<const double>(data).first(10 * dim), 10, dim, 4);  // n < dim
  const PcaModel cov10 = [&] {
    // Same 10 rows, forced through the covariance route by padding dim.
    return fit_pca(std::span<const double>(data).first(10 * dim), 10, dim, 4);
  }();
  CHECK(gram.variances == cov10.variances);
  CHECK(cov.rank == 4);
  for (std::size_t j = 0; j < 4; ++j) CHECK(cov.variances[j] > 0.0);
}

TEST_CASE("pca encoder: mean image maps to zero, file round trip") {
  const std::size_t n = 40;
  const std::vector<double> data = frames_matrix(n);
  const PcaModel m = fit_pca(data, n, sim::kImagePixels, 8);
  const PcaEncoder enc(m);
  sim::Image mean;
  mean.pixels = m.mean;
  for (double v : enc.encode(obs_of(mean))) CHECK(std::abs(v) < 1e-12);
  CHECK(enc.output_scale() == doctest::Approx(1.0 / std::sqrt(m.variances[0])));

  const auto path = tmp_path("pca.bin");
  save_pca(m, path);
  const PcaModel back = load_pca(path);
  CHECK(back.components == m.components);
  CHECK(back.mean == m.mean);
  CHECK(back.variances == m.variances);
  CHECK(load_representation(RepKind::kPca, path, 8)->content_hash() == enc.content_hash());
  CHECK_THROWS_AS(load_representation(RepKind::kPca, path, 12), ConfigError);
  CHECK_THROWS_AS(load_encoder(path, RepKind::kSrlfd), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("pca fit on demos subsamples deterministically") {
  const PcaModel a = fit_pca(noisy_demos(), 4, 30, 7);
  const PcaModel b = fit_pca(noisy_demos(), 4, 30, 7);
  const PcaModel c = fit_pca(noisy_demos(), 4, 30, 8);
  CHECK(a.components == b.components);
  CHECK(a.mean != c.mean);
}

TEST_CASE("ground truth: examples, unit circles, scaled phi derivative") {
  GroundTruth gt;
  CHECK(gt.dim() == 8);
  CHECK_FALSE(gt.uses_images());
  const Representation z = ground_truth_rep({0, 0, 0, 0});
  CHECK(z.phi == std::vector<double>{1, 0, 1, 0});
  CHECK(z.delta == std::vector<double>{0, 0, 0, 0});

  Rng rng(12);
  std::uniform_real_distribution<double> w(-8, 8);
  for (int i = 0; i < 100; ++i) {
    sim::JointState s = sim::reset(rng);
    s.omega1 = w(rng);
    s.omega2 = w(rng);
    const Representation r = ground_truth_rep(s);
    CHECK(std::hypot(r.phi[0], r.phi[1]) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::hypot(r.phi[2], r.phi[3]) == doctest::Approx(1.0).epsilon(1e-15));
    // Central difference of phi along the velocity direction.
    const double h = 1e-6;
    const auto ahead = ground_truth_rep({s.alpha1 + h * s.omega1, s.alpha2 + h * s.omega2, 0, 0}).phi;
    const auto behind = ground_truth_rep({s.alpha1 - h * s.omega1, s.alpha2 - h * s.omega2, 0, 0}).phi;
    for (int k = 0; k < 4; ++k)
      CHECK(r.delta[k] == doctest::Approx(0.25 * (ahead[k] - behind[k]) / (2 * h)).epsilon(1e-6));
    const sim::Observation o{{}, s};
    CHECK(represent_pair(gt, o, o).delta == r.delta);
  }
}

TEST_CASE("encoder checkpoint: round trip and name audit") {
  Rng rng(13);
  const NetworkEncoder enc = make_random_encoder(12, 4, {0.6, 0.3});
  const auto path = tmp_path("enc.ckpt");
  save_encoder(enc, path);
  const auto model = load_representation(RepKind::kRandom, path, 12);
  const sim::Image img = random_image(rng);
  CHECK(model->encode(obs_of(img)) == enc.encode_image(img));
  CHECK(model->content_hash() == enc.content_hash());
  for (const auto& p : grad::load_checkpoint(path))
    CHECK((p.name.rfind("phi.", 0) == 0 || p.name == "norm.stats"));
  CHECK_THROWS_AS(load_representation(RepKind::kSrlfd, path, 8), ConfigError);
  CHECK_THROWS_AS(NetworkEncoder(RepKind::kPca, enc.params(), enc.norm()), ConfigError);
  CHECK(parse_kind("ground_truth") == RepKind::kGroundTruth);
  CHECK_THROWS_AS(parse_kind("vae"), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("autoencoder: decoder shape, ignores actions, loss falls") {
  Rng rng(14);
  for (std::size_t latent : {8, 24}) {
    grad::ParameterSet p;
    init_phi(p, latent, rng);
    init_decoder(p, latent, rng);
    grad::Graph g;
    const auto code = phi_forward(g, p, g.input(grad::Tensor({1, 64, 64, 1}, 0.1)));
    CHECK(g.value(decoder_forward(g, p, code)).shape() == grad::Shape{1, 64, 64, 1});
  }

  const NormStats norm = demos::compute_norm_stats(noisy_demos());
  AutoencoderConfig cfg;
  cfg.latent = 4;
  cfg.steps = 40;
  cfg.batch = 6;
  cfg.adam.lr = 1e-3;
  const auto a = train_autoencoder(noisy_demos(), norm, cfg);
  REQUIRE(a.loss_log.size() == 40);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 5; ++i) {
    first += a.loss_log[i];
    last += a.loss_log[35 + i];
  }
  CHECK(last < first);

  auto scrambled = noisy_demos();
  for (auto& s : scrambled) {
    demos::DemoSet copy(s.task());
    for (auto t : s.trajectories()) {
      for (auto& act : t.actions) act = {std::nan(""), 7.0};
      copy.add_trajectory(std::move(t));
    }
    s = std::move(copy);
  }
  cfg.steps = 3;
  const auto b1 = train_autoencoder(noisy_demos(), norm, cfg);
  const auto b2 = train_autoencoder(scrambled, norm, cfg);
  CHECK(b1.loss_log == b2.loss_log);
  CHECK(b1.encoder.content_hash() == b2.encoder.content_hash());
}
