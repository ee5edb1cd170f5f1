#include <new>
#include <unordered_map>
#include <vector>

#include "srlfd/grad/tensor.hpp"

namespace srlfd::grad::detail {

namespace {

// Below this size the general-purpose allocator is already fast.
constexpr std::size_t kPoolMinBytes = std::size_t{1} << 16;
// Vectorized kernels peel differently depending on operand alignment, which
// changes rounding. A fixed alignment keeps results bit-reproducible.
constexpr std::align_val_t kAlign{64};

struct Pool {
  std::unordered_map<std::size_t, std::vector<void*>> free;
  ~Pool() {
    for (auto& [bytes, blocks] : free)
      for (void* p : blocks) ::operator delete(p, kAlign);
  }
};

Pool& pool() {
  thread_local Pool p;
  return p;
}

}  // namespace

void* pool_allocate(std::size_t bytes) {
  if (bytes >= kPoolMinBytes) {
    auto& list = pool().free[bytes];
    if (!list.empty()) {
      void* p = list.back();
      list.pop_back();
      return p;
    }
  }
  return ::operator new(bytes, kAlign);
}

void pool_release(void* p, std::size_t bytes) noexcept {
  if (bytes >= kPoolMinBytes) {
    try {
      pool().free[bytes].push_back(p);
      return;
    } catch (...) {
    }
  }
  ::operator delete(p, kAlign);
}

}  // namespace srlfd::grad::detail
