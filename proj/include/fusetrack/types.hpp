#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fusetrack {

template <class S> using Vec2T = Eigen::Matrix<S, 2, 1>;
template <class S> using Vec3T = Eigen::Matrix<S, 3, 1>;
template <class S> using Vec4T = Eigen::Matrix<S, 4, 1>;
template <class S> using Mat2T = Eigen::Matrix<S, 2, 2>;
template <class S> using Mat3T = Eigen::Matrix<S, 3, 3>;
template <class S> using Mat4T = Eigen::Matrix<S, 4, 4>;
template <class S> using Mat23T = Eigen::Matrix<S, 2, 3>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Vec4 = Vec4T<double>;
using Mat2 = Mat2T<double>;
using Mat3 = Mat3T<double>;
using Mat4 = Mat4T<double>;
using Mat23 = Mat23T<double>;

enum class ObjectClass : int { Car = 1, Pedestrian = 2 };

inline ObjectClass object_class_from_id(int id) {
  if (id == 1) return ObjectClass::Car;
  if (id == 2) return ObjectClass::Pedestrian;
  throw std::invalid_argument("unknown class id " + std::to_string(id));
}

inline int class_id(ObjectClass c) { return static_cast<int>(c); }

// Axis-aligned image-space box, (x1,y1) top-left, (x2,y2) bottom-right.
struct BBox2 {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  bool valid() const { return x1 < x2 && y1 < y2; }
};

inline double box_iou(const BBox2& a, const BBox2& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

// Error reading or parsing an input file; carries the byte offset at
// which the problem was detected.
struct InputError : std::runtime_error {
  InputError(const std::string& file, std::uint64_t byte_offset, const std::string& what)
      : std::runtime_error(file + " (byte " + std::to_string(byte_offset) + "): " + what),
        file_name(file),
        offset(byte_offset) {}

  std::string file_name;
  std::uint64_t offset;
};

}  // namespace fusetrack
