#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <type_traits>

#include "kplab/errors.hpp"

namespace kplab {

/// Composite Simpson weights for n+1 equispaced points (n even) with spacing dx.
inline double simpson_weight(std::size_t i, std::size_t n, double dx) {
  if (i == 0 || i == n) return dx / 3.0;
  return (i % 2 == 1 ? 4.0 : 2.0) * dx / 3.0;
}

/// Composite Simpson rule of f on [a, b] with n (even) sub-intervals.
template <class F>
auto simpson(F&& f, double a, double b, std::size_t n) {
  if (n < 2 || n % 2 != 0) throw ConfigError("simpson: interval count must be even and >= 2");
  const double dx = (b - a) / double(n);
  using R = std::decay_t<std::invoke_result_t<F&, double>>;
  R acc = f(a) * simpson_weight(0, n, dx);
  for (std::size_t i = 1; i <= n; ++i) acc += f(a + dx * double(i)) * simpson_weight(i, n, dx);
  return acc;
}

/// Simpson rule over already sampled values (odd count, uniform spacing dx).
template <class T>
T simpson_samples(std::span<const T> values, double dx) {
  if (values.size() < 3 || values.size() % 2 == 0)
    throw DomainError("simpson: need an odd number (>= 3) of samples");
  const std::size_t n = values.size() - 1;
  T acc = values[0] * simpson_weight(0, n, dx);
  for (std::size_t i = 1; i <= n; ++i) acc += values[i] * simpson_weight(i, n, dx);
  return acc;
}

}  // namespace kplab
