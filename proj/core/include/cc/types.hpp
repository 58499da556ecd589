#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/SparseCore>

namespace cc {

using Complex = std::complex<double>;
using SparseOp = Eigen::SparseMatrix<Complex>;

using LinkId = std::int32_t;
using NodeId = std::int32_t;

inline constexpr LinkId kNoLink = -1;
inline constexpr NodeId kNoNode = -1;

constexpr double kPi = 3.14159265358979323846;

enum class Topology { kTorus, kCylinderX };

/// Direction of travel along a directed link.
enum class Orientation : std::uint8_t { kPlusX, kMinusX, kPlusY, kMinusY };

inline const char* to_string(Orientation o) {
  switch (o) {
    case Orientation::kPlusX: return "+x";
    case Orientation::kMinusX: return "-x";
    case Orientation::kPlusY: return "+y";
    case Orientation::kMinusY: return "-y";
  }
  return "?";
}

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct KirchhoffViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IncompleteDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cc
