#include "srlfd/grad/checkpoint.hpp"

#include "srlfd/binary_io.hpp"

namespace srlfd::grad {

void save_checkpoint(const std::string& path, const ParameterSet& params) {
  BinaryWriter w(path);
  w.magic(kCheckpointMagic);
  for (const auto& p : params) {
    w.put(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.put(static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) w.put(static_cast<std::uint64_t>(d));
    w.bytes(p.value.raw(), p.value.size() * sizeof(double));
  }
  w.close();
}

ParameterSet load_checkpoint(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic(kCheckpointMagic);
  ParameterSet params;
  while (!r.at_end()) {
    const auto len = r.get<std::uint32_t>();
    if (len > r.remaining()) throw TruncatedError("'" + path + "' is truncated (name)");
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw FormatError("'" + path + "': implausible tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    const std::size_t count = element_count(shape);
    if (count * sizeof(double) > r.remaining())
      throw TruncatedError("'" + path + "' is truncated (payload of '" + name + "')");
    std::vector<double> data(count);
    r.bytes(data.data(), count * sizeof(double));
    params.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return params;
}

}  // namespace srlfd::grad
