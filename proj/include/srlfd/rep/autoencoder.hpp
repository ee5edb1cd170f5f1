#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "srlfd/grad/optim.hpp"
#include "srlfd/rep/representation.hpp"

namespace srlfd::rep {

// Decoder mirroring phi:
//   latent -> dense(48,400) -> scaled_tanh -> 55x55x16
//   -> [unpool, tconv 3x3 16->16, scaled_tanh] x 2 -> unpool -> tconv 3x3 16->1
// Spatial trace 55 -> 56 -> 58 -> 59 -> 61 -> 62 -> 64; the last layer is
// linear because targets are normalized pixels.
void init_decoder(grad::ParameterSet& params, std::size_t latent, Rng& rng);
grad::NodeId decoder_forward(grad::Graph& g, grad::ParameterSet& params, grad::NodeId code);

struct AutoencoderConfig {
  std::size_t latent = 8;
  std::size_t steps = 4000;
  std::size_t batch = 64;
  grad::AdamConfig adam;
  std::uint64_t seed = 1;
};

struct AutoencoderResult {
  NetworkEncoder encoder;
  std::vector<double> loss_log;  // per-pixel MSE of each training batch
};

// Mean over the batch of per-pixel squared error; `images` normalized.
grad::NodeId reconstruction_loss(grad::Graph& g, grad::ParameterSet& params, grad::NodeId images);

// Trains on demonstration frames only (actions are never read). Batches
// are drawn uniformly over all frames. NumericFault names the step.
AutoencoderResult train_autoencoder(const std::vector<demos::DemoSet>& demos, const NormStats& norm,
                                    const AutoencoderConfig& cfg,
                                    const std::function<void(std::size_t, double)>& on_step = {});

}  // namespace srlfd::rep
