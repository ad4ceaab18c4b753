#pragma once

#include <algorithm>
#include <cmath>

#include "city3dqa/errors.hpp"

namespace city3dqa {

// Scene-local coordinates, meters, right-handed, z up.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool is_finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }

  friend Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend Vec3 operator*(const Vec3& a, double s) {
    return {a.x * s, a.y * s, a.z * s};
  }
  friend bool operator==(const Vec3& a, const Vec3& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
  }
};

struct Aabb {
  Vec3 min;
  Vec3 max;

  bool valid() const {
    return min.is_finite() && max.is_finite() && min.x <= max.x &&
           min.y <= max.y && min.z <= max.z;
  }

  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }

  Vec3 center() const {
    return {0.5 * (min.x + max.x), 0.5 * (min.y + max.y),
            0.5 * (min.z + max.z)};
  }

  void expand(const Vec3& p) {
    min.x = std::min(min.x, p.x);
    min.y = std::min(min.y, p.y);
    min.z = std::min(min.z, p.z);
    max.x = std::max(max.x, p.x);
    max.y = std::max(max.y, p.y);
    max.z = std::max(max.z, p.z);
  }

  void expand(const Aabb& other) {
    expand(other.min);
    expand(other.max);
  }

  Vec3 clamp(const Vec3& p) const {
    return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y),
            std::clamp(p.z, min.z, max.z)};
  }
};

inline double euclidean_distance(const Vec3& a, const Vec3& b) {
  if (!a.is_finite() || !b.is_finite()) {
    throw ValidationError("euclidean_distance: non-finite input");
  }
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace city3dqa
