#include "srlfd/rep/phi.hpp"

#include "srlfd/errors.hpp"

namespace srlfd::rep {

namespace {

constexpr const char* kConvNames[3] = {"phi.conv1", "phi.conv2", "phi.conv3"};

}  // namespace

void init_phi(grad::ParameterSet& params, std::size_t latent, Rng& rng) {
  if (latent < 1) throw ConfigError("encoder latent size must be >= 1");
  std::size_t c_in = 1;
  for (const char* name : kConvNames) {
    const std::string base(name);
    params.add(base + ".k", grad::glorot_uniform({3, 3, c_in, kPhiFilters}, 9 * c_in, 9 * kPhiFilters, rng));
    params.add(base + ".b", grad::Tensor({kPhiFilters}));
    c_in = kPhiFilters;
  }
  params.add("phi.dense.w", grad::glorot_uniform({kPhiFlatten, latent}, kPhiFlatten, latent, rng));
  params.add("phi.dense.b", grad::Tensor({latent}));
}

std::size_t phi_latent(const grad::ParameterSet& params) {
  const auto* b = params.find("phi.dense.b");
  if (!b) throw ConfigError("parameter set has no encoder (phi.dense.b missing)");
  return b->value.dim(0);
}

std::vector<grad::Shape> phi_shapes(const grad::ParameterSet& params) {
  std::vector<grad::Shape> out;
  for (const auto& p : params)
    if (p.name.rfind("phi.", 0) == 0) out.push_back(p.value.shape());
  return out;
}

grad::NodeId phi_features(grad::Graph& g, grad::ParameterSet& params, grad::NodeId images) {
  grad::NodeId x = images;
  for (const char* name : kConvNames) {
    const std::string base(name);
    x = g.conv2d(x, g.param(params.at(base + ".k")), g.param(params.at(base + ".b")));
    x = g.scaled_tanh(x);
    x = g.maxpool2x2(x);
  }
  const std::size_t batch = g.value(x).dim(0);
  return g.reshape(x, {batch, g.value(x).size() / batch});
}

grad::NodeId phi_forward(grad::Graph& g, grad::ParameterSet& params, grad::NodeId images) {
  const grad::NodeId f = phi_features(g, params, images);
  return g.scaled_tanh(g.dense(f, g.param(params.at("phi.dense.w")), g.param(params.at("phi.dense.b"))));
}

grad::Tensor normalize_frames(std::span<const std::uint8_t* const> frames, const NormStats& norm) {
  if (frames.empty()) throw DimensionError("normalize_frames: empty batch");
  grad::Tensor t({frames.size(), sim::kImageSide, sim::kImageSide, 1});
  double* out = t.raw();
  for (const std::uint8_t* f : frames)
    for (std::size_t i = 0; i < sim::kImagePixels; ++i) *out++ = (f[i] / 255.0 - norm.mu) / norm.sigma;
  return t;
}

grad::Tensor normalize_images(std::span<const std::vector<double>* const> images, const NormStats& norm) {
  if (images.empty()) throw DimensionError("normalize_images: empty batch");
  grad::Tensor t({images.size(), sim::kImageSide, sim::kImageSide, 1});
  double* out = t.raw();
  for (const auto* img : images) {
    if (img->size() != sim::kImagePixels) throw DimensionError("normalize_images: image is not 64x64");
    for (double v : *img) *out++ = (v - norm.mu) / norm.sigma;
  }
  return t;
}

}  // namespace srlfd::rep
