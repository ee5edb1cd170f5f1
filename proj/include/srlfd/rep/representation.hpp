#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "srlfd/grad/parameters.hpp"
#include "srlfd/rep/pca.hpp"
#include "srlfd/rep/phi.hpp"
#include "srlfd/sim/env.hpp"

namespace srlfd::rep {

enum class RepKind { kSrlfd, kPca, kAutoencoder, kRandom, kGroundTruth };

const char* kind_name(RepKind k);
RepKind parse_kind(const std::string& s);

// (phi_t, delta_phi_t); total dimension 2 * phi.size().
struct Representation {
  std::vector<double> phi;
  std::vector<double> delta;

  std::size_t dim() const { return phi.size() + delta.size(); }
  std::vector<double> flat() const;
};

// Frozen map from observations to phi. Implementations are immutable after
// construction, so encode() is safe to call from several threads.
class RepresentationModel {
 public:
  virtual ~RepresentationModel() = default;

  virtual RepKind kind() const = 0;
  virtual std::size_t latent() const = 0;
  std::size_t dim() const { return 2 * latent(); }
  // False when only the joint state is read (rendering can be skipped).
  virtual bool uses_images() const { return true; }

  virtual std::vector<double> encode(const sim::Observation& obs) const = 0;
  // Default: (phi_curr, phi_curr - phi_prev).
  virtual Representation combine(const std::vector<double>& phi_prev, const std::vector<double>& phi_curr,
                                 const sim::Observation& curr) const;
  // Identifies the model's frozen contents.
  virtual std::uint64_t content_hash() const = 0;
};

Representation represent_pair(const RepresentationModel& model, const sim::Observation& prev,
                              const sim::Observation& curr);

// phi network with frozen weights plus its input normalization. Backs the
// srlfd, autoencoder and random kinds.
class NetworkEncoder final : public RepresentationModel {
 public:
  NetworkEncoder(RepKind kind, grad::ParameterSet params, NormStats norm);

  RepKind kind() const override { return kind_; }
  std::size_t latent() const override { return latent_; }
  std::vector<double> encode(const sim::Observation& obs) const override;
  std::uint64_t content_hash() const override;

  std::vector<double> encode_image(const sim::Image& img) const;
  // One row per frame; equal to encode_image() up to rounding (batched
  // products take a different kernel path).
  std::vector<std::vector<double>> encode_frames(std::span<const std::uint8_t* const> frames) const;

  const grad::ParameterSet& params() const { return params_; }
  const NormStats& norm() const { return norm_; }

 private:
  std::vector<std::vector<double>> run(const grad::Tensor& batch) const;

  RepKind kind_;
  // Graph construction needs mutable Parameter references; nothing here
  // ever writes through them.
  mutable grad::ParameterSet params_;
  NormStats norm_;
  std::size_t latent_;
};

// Projection onto the leading principal components, divided by the
// standard deviation of the first one.
class PcaEncoder final : public RepresentationModel {
 public:
  explicit PcaEncoder(PcaModel model);

  RepKind kind() const override { return RepKind::kPca; }
  std::size_t latent() const override { return model_.k; }
  std::vector<double> encode(const sim::Observation& obs) const override;
  std::uint64_t content_hash() const override;

  std::vector<double> encode_image(const sim::Image& img) const;
  const PcaModel& model() const { return model_; }
  double output_scale() const { return scale_; }

 private:
  PcaModel model_;
  double scale_;
};

inline constexpr double kVelocityScale = 0.25;

// phi = (cos a1, sin a1, cos a2, sin a2); the delta slot is
// kVelocityScale * d(phi)/dt from the joint velocities. d = 8.
class GroundTruth final : public RepresentationModel {
 public:
  RepKind kind() const override { return RepKind::kGroundTruth; }
  std::size_t latent() const override { return 4; }
  bool uses_images() const override { return false; }
  std::vector<double> encode(const sim::Observation& obs) const override;
  Representation combine(const std::vector<double>& phi_prev, const std::vector<double>& phi_curr,
                         const sim::Observation& curr) const override;
  std::uint64_t content_hash() const override { return 0x6774; }
};

Representation ground_truth_rep(const sim::JointState& s);

NetworkEncoder make_random_encoder(std::size_t latent, std::uint64_t seed, NormStats norm);

// Encoder checkpoints: phi.* parameters plus "norm.stats" = [mu, sigma].
void save_encoder(const NetworkEncoder& enc, const std::string& path);
NetworkEncoder load_encoder(const std::string& path, RepKind kind);

// Loads any kind; `path` is ignored for ground truth. When `latent` is
// nonzero it must match the stored model.
std::unique_ptr<RepresentationModel> load_representation(RepKind kind, const std::string& path,
                                                         std::size_t latent = 0);

}  // namespace srlfd::rep
