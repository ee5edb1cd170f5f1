#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace srlfd::grad {

namespace detail {

// Every buffer is 64-byte aligned. Large ones are recycled by exact size. Training rebuilds an
// identically shaped graph every batch, so after the first step every
// activation and gradient buffer comes from this free list instead of a
// fresh (page-faulting) heap mapping. Per-thread; blocks are never returned
// to the OS.
void* pool_allocate(std::size_t bytes);
void pool_release(void* p, std::size_t bytes) noexcept;

template <class T>
struct PooledAllocator {
  using value_type = T;
  PooledAllocator() = default;
  template <class U>
  PooledAllocator(const PooledAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(pool_allocate(n * sizeof(T))); }
  void deallocate(T* p, std::size_t n) noexcept { pool_release(p, n * sizeof(T)); }
  template <class U>
  bool operator==(const PooledAllocator<U>&) const noexcept {
    return true;
  }
};

template <class T>
using PooledVector = std::vector<T, PooledAllocator<T>>;

}  // namespace detail

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

// Dense row-major array of doubles. A rank-0 tensor (empty shape) holds a
// single scalar.
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* raw() noexcept { return data_.data(); }
  const double* raw() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double item() const;
  bool all_finite() const noexcept;
  void fill(double v);

  // Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  detail::PooledVector<double> data_;
};

}  // namespace srlfd::grad
