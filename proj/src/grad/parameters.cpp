#include "srlfd/grad/parameters.hpp"

#include <cmath>
#include <cstring>

#include "srlfd/errors.hpp"

namespace srlfd::grad {

Parameter& ParameterSet::add(std::string name, Tensor value) {
  if (find(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  params_.push_back(Parameter{std::move(name), std::move(value)});
  return params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

Parameter& ParameterSet::at(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw ConfigError("no parameter named '" + std::string(name) + "'");
}

const Parameter& ParameterSet::at(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw ConfigError("no parameter named '" + std::string(name) + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<Parameter*> ParameterSet::with_prefix(std::string_view prefix) {
  std::vector<Parameter*> out;
  for (auto& p : params_)
    if (std::string_view(p.name).starts_with(prefix)) out.push_back(&p);
  return out;
}

void ParameterSet::assign_values(const ParameterSet& other) {
  if (other.size() != size()) throw DimensionError("parameter sets differ in size");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].value.shape() != other.params_[i].value.shape())
      throw DimensionError("parameter '" + params_[i].name + "' shape mismatch");
    params_[i].value = other.params_[i].value;
  }
}

namespace {
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* b = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= kFnvPrime;
  }
}
}  // namespace

std::uint64_t ParameterSet::content_hash() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& p : params_) {
    fnv(h, p.name.data(), p.name.size());
    for (auto d : p.value.shape()) fnv(h, &d, sizeof d);
    fnv(h, p.value.raw(), p.value.size() * sizeof(double));
  }
  return h;
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

}  // namespace srlfd::grad
