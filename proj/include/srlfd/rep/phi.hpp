#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srlfd/demos/dataset.hpp"
#include "srlfd/grad/graph.hpp"

namespace srlfd::rep {

using demos::NormStats;

// Image encoder topology shared by the learned, autoencoder and random
// models:
//   64x64x1 -> [conv 3x3x16, scaled_tanh, maxpool 2x2/1] x 3
//           -> flatten 55*55*16 -> dense(latent) -> scaled_tanh
inline constexpr std::size_t kPhiFilters = 16;
inline constexpr std::size_t kPhiOutSide = 55;
inline constexpr std::size_t kPhiFlatten = kPhiOutSide * kPhiOutSide * kPhiFilters;  // 48,400

// Adds phi.conv{1,2,3}.{k,b} and phi.dense.{w,b}: Glorot kernels, zero biases.
void init_phi(grad::ParameterSet& params, std::size_t latent, Rng& rng);
std::size_t phi_latent(const grad::ParameterSet& params);
// Shapes of every phi.* parameter, in insertion order.
std::vector<grad::Shape> phi_shapes(const grad::ParameterSet& params);

// `images` is B x 64 x 64 x 1, already normalized. Returns B x latent.
grad::NodeId phi_forward(grad::Graph& g, grad::ParameterSet& params, grad::NodeId images);
// Same network, also exposing the flattened conv features (B x 48,400).
grad::NodeId phi_features(grad::Graph& g, grad::ParameterSet& params, grad::NodeId images);

// (v - mu) / sigma for 8-bit frames (v = byte / 255) or [0,1] images.
grad::Tensor normalize_frames(std::span<const std::uint8_t* const> frames, const NormStats& norm);
grad::Tensor normalize_images(std::span<const std::vector<double>* const> images, const NormStats& norm);

}  // namespace srlfd::rep
