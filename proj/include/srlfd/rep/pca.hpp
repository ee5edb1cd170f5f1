#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srlfd/demos/dataset.hpp"

namespace srlfd::rep {

// Principal subspace of a sample set. Components are stored column-wise in
// a dim x k row-major matrix, ordered by decreasing variance, each with its
// largest-magnitude entry positive.
struct PcaModel {
  std::size_t dim = 0;
  std::size_t k = 0;
  std::size_t rank = 0;  // leading components with nonzero variance; the rest are zero
  std::vector<double> mean;
  std::vector<double> components;
  std::vector<double> variances;  // per component, population variance

  double component(std::size_t row, std::size_t j) const { return components[row * k + j]; }
  std::vector<double> project(std::span<const double> x) const;
  std::vector<double> reconstruct(std::span<const double> z) const;
  // Mean squared per-coordinate reconstruction error over rows of `data`.
  double reconstruction_mse(std::span<const double> data) const;
};

// `data` holds n rows of length dim. Uses the n x n Gram matrix when
// n < dim and the dim x dim covariance otherwise. Components beyond the
// data rank are zero-filled.
PcaModel fit_pca(std::span<const double> data, std::size_t n, std::size_t dim, std::size_t k);

// Fits on stored demonstration frames (values byte / 255), using a seeded
// subsample of at most `max_samples` frames.
PcaModel fit_pca(const std::vector<demos::DemoSet>& demos, std::size_t k, std::size_t max_samples,
                 std::uint64_t seed);

// Container:
//   "SRLP1", k u32, mean dim x f64, components dim x k f64 (row-major),
//   variances k x f64
inline constexpr const char* kPcaMagic = "SRLP1";

void save_pca(const PcaModel& m, const std::string& path);
PcaModel load_pca(const std::string& path);

}  // namespace srlfd::rep
