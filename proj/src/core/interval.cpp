#include "pulsecal/interval.hpp"

#include <algorithm>
#include <cmath>

#include "pulsecal/error.hpp"

namespace pulsecal {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Parametric:
      return "parametric";
    case Method::SplitConformal:
      return "split-conformal";
    case Method::Aci:
      return "aci";
    case Method::Mondrian:
      return "mondrian";
    case Method::Bootstrap:
      return "bootstrap";
  }
  return "unknown";
}

Interval make_interval(double center, double half_width, double level, Method method,
                       ScoreRange range) {
  require(std::isfinite(half_width) && half_width >= 0.0, "half-width must be finite and >= 0");
  Interval out;
  out.center = range.clamp(center);
  out.lower = range.clamp(center - half_width);
  out.upper = range.clamp(center + half_width);
  out.lower = std::min(out.lower, out.center);
  out.upper = std::max(out.upper, out.center);
  out.level = level;
  out.method = method;
  return out;
}

Interval full_range_interval(double center, double level, Method method, ScoreRange range) {
  Interval out;
  out.center = range.clamp(center);
  out.lower = range.lo;
  out.upper = range.hi;
  out.level = level;
  out.method = method;
  out.unbounded = true;
  return out;
}

}  // namespace pulsecal
