#include "srlfd/rep/representation.hpp"

#include <cmath>
#include <cstring>

#include "srlfd/errors.hpp"
#include "srlfd/grad/checkpoint.hpp"

namespace srlfd::rep {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

const char* kind_name(RepKind k) {
  switch (k) {
    case RepKind::kSrlfd: return "srlfd";
    case RepKind::kPca: return "pca";
    case RepKind::kAutoencoder: return "autoencoder";
    case RepKind::kRandom: return "random";
    case RepKind::kGroundTruth: return "ground_truth";
  }
  return "?";
}

RepKind parse_kind(const std::string& s) {
  for (RepKind k : {RepKind::kSrlfd, RepKind::kPca, RepKind::kAutoencoder, RepKind::kRandom, RepKind::kGroundTruth})
    if (s == kind_name(k)) return k;
  throw ConfigError("unknown representation kind '" + s + "'");
}

std::vector<double> Representation::flat() const {
  std::vector<double> v(phi);
  v.insert(v.end(), delta.begin(), delta.end());
  return v;
}

Representation RepresentationModel::combine(const std::vector<double>& phi_prev, const std::vector<double>& phi_curr,
                                            const sim::Observation&) const {
  if (phi_prev.size() != phi_curr.size()) throw DimensionError("combine: phi sizes differ");
  Representation r{phi_curr, std::vector<double>(phi_curr.size())};
  for (std::size_t i = 0; i < phi_curr.size(); ++i) r.delta[i] = phi_curr[i] - phi_prev[i];
  return r;
}

Representation represent_pair(const RepresentationModel& model, const sim::Observation& prev,
                              const sim::Observation& curr) {
  return model.combine(model.encode(prev), model.encode(curr), curr);
}

NetworkEncoder::NetworkEncoder(RepKind kind, grad::ParameterSet params, NormStats norm)
    : kind_(kind), params_(std::move(params)), norm_(norm), latent_(phi_latent(params_)) {
  if (kind == RepKind::kPca || kind == RepKind::kGroundTruth)
    throw ConfigError(std::string("a network encoder cannot have kind ") + kind_name(kind));
  if (!(norm.sigma > 0.0)) throw ConfigError("normalization sigma must be positive");
}

std::vector<std::vector<double>> NetworkEncoder::run(const grad::Tensor& batch) const {
  grad::Graph g;
  const grad::Tensor& out = g.value(phi_forward(g, params_, g.input(batch)));
  const std::size_t b = out.dim(0);
  std::vector<std::vector<double>> rows(b);
  for (std::size_t i = 0; i < b; ++i) rows[i].assign(out.raw() + i * latent_, out.raw() + (i + 1) * latent_);
  return rows;
}

std::vector<double> NetworkEncoder::encode_image(const sim::Image& img) const {
  const std::vector<double>* one[] = {&img.pixels};
  return run(normalize_images(one, norm_))[0];
}

std::vector<double> NetworkEncoder::encode(const sim::Observation& obs) const { return encode_image(obs.image); }

std::vector<std::vector<double>> NetworkEncoder::encode_frames(std::span<const std::uint8_t* const> frames) const {
  std::vector<std::vector<double>> out;
  constexpr std::size_t kChunk = 64;
  for (std::size_t i = 0; i < frames.size(); i += kChunk) {
    auto part = run(normalize_frames(frames.subspan(i, std::min(kChunk, frames.size() - i)), norm_));
    for (auto& r : part) out.push_back(std::move(r));
  }
  return out;
}

std::uint64_t NetworkEncoder::content_hash() const {
  std::uint64_t h = params_.content_hash();
  h = fnv1a(h, &norm_.mu, sizeof norm_.mu);
  return fnv1a(h, &norm_.sigma, sizeof norm_.sigma);
}

PcaEncoder::PcaEncoder(PcaModel model) : model_(std::move(model)) {
  if (model_.dim != sim::kImagePixels) throw DimensionError("pca encoder needs a 64x64 image model");
  scale_ = model_.rank > 0 ? 1.0 / std::sqrt(model_.variances[0]) : 1.0;
}

std::vector<double> PcaEncoder::encode_image(const sim::Image& img) const {
  std::vector<double> z = model_.project(img.pixels);
  for (double& v : z) v *= scale_;
  return z;
}

std::vector<double> PcaEncoder::encode(const sim::Observation& obs) const { return encode_image(obs.image); }

std::uint64_t PcaEncoder::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, model_.mean.data(), model_.mean.size() * sizeof(double));
  h = fnv1a(h, model_.components.data(), model_.components.size() * sizeof(double));
  return fnv1a(h, model_.variances.data(), model_.variances.size() * sizeof(double));
}

Representation ground_truth_rep(const sim::JointState& s) {
  const double c1 = std::cos(s.alpha1), s1 = std::sin(s.alpha1);
  const double c2 = std::cos(s.alpha2), s2 = std::sin(s.alpha2);
  return {{c1, s1, c2, s2},
          {-kVelocityScale * s1 * s.omega1, kVelocityScale * c1 * s.omega1, -kVelocityScale * s2 * s.omega2,
           kVelocityScale * c2 * s.omega2}};
}

std::vector<double> GroundTruth::encode(const sim::Observation& obs) const { return ground_truth_rep(obs.state).phi; }

Representation GroundTruth::combine(const std::vector<double>&, const std::vector<double>&,
                                    const sim::Observation& curr) const {
  return ground_truth_rep(curr.state);
}

NetworkEncoder make_random_encoder(std::size_t latent, std::uint64_t seed, NormStats norm) {
  grad::ParameterSet params;
  Rng rng = make_rng(seed, {0x72616e64});
  init_phi(params, latent, rng);
  return NetworkEncoder(RepKind::kRandom, std::move(params), norm);
}

void save_encoder(const NetworkEncoder& enc, const std::string& path) {
  grad::ParameterSet out;
  for (const auto& p : enc.params())
    if (p.name.rfind("phi.", 0) == 0) out.add(p.name, p.value);
  out.add("norm.stats", grad::Tensor({2}, {enc.norm().mu, enc.norm().sigma}));
  grad::save_checkpoint(path, out);
}

NetworkEncoder load_encoder(const std::string& path, RepKind kind) {
  grad::ParameterSet all = grad::load_checkpoint(path);
  const grad::Parameter* stats = all.find("norm.stats");
  if (!stats || stats->value.size() != 2) throw FormatError("'" + path + "' has no normalization statistics");
  grad::ParameterSet phi;
  for (const auto& p : all)
    if (p.name.rfind("phi.", 0) == 0) phi.add(p.name, p.value);
  return NetworkEncoder(kind, std::move(phi), {stats->value[0], stats->value[1]});
}

std::unique_ptr<RepresentationModel> load_representation(RepKind kind, const std::string& path, std::size_t latent) {
  std::unique_ptr<RepresentationModel> m;
  switch (kind) {
    case RepKind::kGroundTruth: m = std::make_unique<GroundTruth>(); break;
    case RepKind::kPca: m = std::make_unique<PcaEncoder>(load_pca(path)); break;
    default: m = std::make_unique<NetworkEncoder>(load_encoder(path, kind)); break;
  }
  if (latent != 0 && m->latent() != latent)
    throw ConfigError(std::string(kind_name(kind)) + " model at '" + path + "' has latent size " +
                      std::to_string(m->latent()) + ", expected " + std::to_string(latent));
  return m;
}

}  // namespace srlfd::rep
