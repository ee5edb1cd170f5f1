#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "srlfd/grad/tensor.hpp"
#include "srlfd/rng.hpp"

namespace srlfd::grad {

struct Parameter {
  std::string name;
  Tensor value;
};

// Ordered collection of named learnable tensors. Element addresses are
// stable across insertions, so graphs may hold Parameter pointers for the
// lifetime of the set.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor value);

  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  std::size_t size() const noexcept { return params_.size(); }
  bool empty() const noexcept { return params_.empty(); }
  std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::vector<Parameter*> all();
  std::vector<Parameter*> with_prefix(std::string_view prefix);

  // Copies values (not names) from another set with identical layout.
  void assign_values(const ParameterSet& other);

  // 64-bit FNV-1a over names, shapes and raw value bits.
  std::uint64_t content_hash() const;

 private:
  std::deque<Parameter> params_;
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace srlfd::grad
