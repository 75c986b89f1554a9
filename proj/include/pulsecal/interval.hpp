#pragma once

#include <string_view>

namespace pulsecal {

enum class Method { Parametric, SplitConformal, Aci, Mondrian, Bootstrap };

std::string_view to_string(Method method);

// Closed range that scores (or score differences) live in.
struct ScoreRange {
  double lo = 0.0;
  double hi = 1.0;

  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  double span() const { return hi - lo; }
};

inline constexpr ScoreRange kUnitRange{0.0, 1.0};
inline constexpr ScoreRange kDifferenceRange{-1.0, 1.0};

struct Interval {
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;
  Method method = Method::SplitConformal;
  // The conformal rank exceeded the calibration size; the interval spans the range.
  bool unbounded = false;
  // Zero-width interval produced by a zero scale estimate.
  bool degenerate = false;

  double width() const { return upper - lower; }
  bool contains(double x) const { return lower <= x && x <= upper; }
};

// Symmetric interval center +/- half_width, clamped into range. The center is
// clamped as well so lower <= center <= upper always holds.
Interval make_interval(double center, double half_width, double level, Method method,
                       ScoreRange range = kUnitRange);

// The whole range, flagged unbounded.
Interval full_range_interval(double center, double level, Method method,
                             ScoreRange range = kUnitRange);

}  // namespace pulsecal
