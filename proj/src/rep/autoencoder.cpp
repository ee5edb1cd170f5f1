#include "srlfd/rep/autoencoder.hpp"

#include "srlfd/errors.hpp"

namespace srlfd::rep {

void init_decoder(grad::ParameterSet& params, std::size_t latent, Rng& rng) {
  params.add("dec.dense.w", grad::glorot_uniform({latent, kPhiFlatten}, latent, kPhiFlatten, rng));
  params.add("dec.dense.b", grad::Tensor({kPhiFlatten}));
  const std::size_t outs[3] = {kPhiFilters, kPhiFilters, 1};
  for (int i = 0; i < 3; ++i) {
    const std::string base = "dec.tconv" + std::to_string(i + 1);
    const std::size_t f = outs[i];
    params.add(base + ".k", grad::glorot_uniform({3, 3, f, kPhiFilters}, 9 * kPhiFilters, 9 * f, rng));
    params.add(base + ".b", grad::Tensor({f}));
  }
}

grad::NodeId decoder_forward(grad::Graph& g, grad::ParameterSet& params, grad::NodeId code) {
  const std::size_t batch = g.value(code).dim(0);
  grad::NodeId x = g.dense(code, g.param(params.at("dec.dense.w")), g.param(params.at("dec.dense.b")));
  x = g.reshape(g.scaled_tanh(x), {batch, kPhiOutSide, kPhiOutSide, kPhiFilters});
  for (int i = 1; i <= 3; ++i) {
    const std::string base = "dec.tconv" + std::to_string(i);
    x = g.unpool2x2(x);
    x = g.conv_transpose2d(x, g.param(params.at(base + ".k")), g.param(params.at(base + ".b")));
    if (i < 3) x = g.scaled_tanh(x);
  }
  return x;
}

grad::NodeId reconstruction_loss(grad::Graph& g, grad::ParameterSet& params, grad::NodeId images) {
  const grad::NodeId recon = decoder_forward(g, params, phi_forward(g, params, images));
  return g.scale(g.mse(recon, images), 1.0 / static_cast<double>(sim::kImagePixels));
}

AutoencoderResult train_autoencoder(const std::vector<demos::DemoSet>& demos, const NormStats& norm,
                                    const AutoencoderConfig& cfg,
                                    const std::function<void(std::size_t, double)>& on_step) {
  if (cfg.batch < 1 || cfg.steps < 1) throw ConfigError("autoencoder steps and batch must be >= 1");
  std::vector<const std::uint8_t*> frames;
  for (const auto& set : demos)
    for (const auto& t : set.trajectories())
      for (std::size_t i = 0; i < t.length(); ++i) frames.push_back(t.frame(i));
  if (frames.size() < cfg.batch) throw ConfigError("autoencoder batch exceeds the number of frames");

  Rng rng = make_rng(cfg.seed, {0x6165});
  grad::ParameterSet params;
  init_phi(params, cfg.latent, rng);
  init_decoder(params, cfg.latent, rng);
  const std::vector<grad::Parameter*> all = params.all();
  grad::AdamState adam;

  std::vector<double> log;
  log.reserve(cfg.steps);
  std::vector<std::size_t> idx(frames.size());
  std::vector<const std::uint8_t*> batch(cfg.batch);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    // Partial Fisher-Yates: b distinct frames.
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      batch[i] = frames[idx[i]];
    }
    grad::Graph g;
    const grad::NodeId loss = reconstruction_loss(g, params, g.input(normalize_frames(batch, norm)));
    grad::GradientTable grads;
    try {
      grads = g.backward(loss);
    } catch (const NumericFault& e) {
      throw NumericFault("autoencoder diverged at step " + std::to_string(step) + ": " + e.what(), e.node());
    }
    grad::adam_step(all, grads, adam, cfg.adam);
    log.push_back(g.value(loss).item());
    if (on_step) on_step(step, log.back());
  }

  grad::ParameterSet enc;
  for (const auto& p : params)
    if (p.name.rfind("phi.", 0) == 0) enc.add(p.name, p.value);
  return {NetworkEncoder(RepKind::kAutoencoder, std::move(enc), norm), std::move(log)};
}

}  // namespace srlfd::rep
