#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>

namespace rescue_sfs {

/// Integer indices i with x1*scale < i < x2*scale, as (first, last).
/// last == nullopt means unbounded (x2 = inf). Empty when first > last.
struct IndexWindow {
  std::uint64_t first = 1;
  std::optional<std::uint64_t> last;

  bool contains(std::uint64_t i) const { return i >= first && (!last || i <= *last); }
  bool empty() const { return last && *last < first; }
};

inline IndexWindow open_window(double x1, double x2, double scale) {
  if (!(x1 >= 0.0)) throw std::invalid_argument("window: x1 >= 0 required");
  if (!(x1 < x2)) throw std::invalid_argument("window: x1 < x2 required");
  IndexWindow w;
  const double lo = x1 * scale;
  w.first = static_cast<std::uint64_t>(std::floor(lo)) + 1;
  if (w.first < 1) w.first = 1;
  if (std::isfinite(x2)) {
    const double hi = std::ceil(x2 * scale) - 1.0;
    w.last = hi < 0.0 ? 0 : static_cast<std::uint64_t>(hi);
  }
  return w;
}

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace rescue_sfs
