#include <algorithm>
#include <cmath>

#include "pulsecal/conformal.hpp"
#include "pulsecal/error.hpp"

namespace pulsecal::conformal {

AciState AciState::start(double target_alpha, double step_size) {
  require(target_alpha > 0.0 && target_alpha < 1.0, "target miscoverage must lie in (0, 1)");
  require(step_size > 0.0 && std::isfinite(step_size), "ACI step size must be positive");
  AciState state;
  state.working_alpha = target_alpha;
  state.head = target_alpha;
  state.initial_alpha = target_alpha;
  state.target_alpha = target_alpha;
  state.step_size = step_size;
  return state;
}

double AciState::telescoped_alpha() const {
  const long double drift = static_cast<long double>(steps) * target_alpha -
                            static_cast<long double>(errors);
  return static_cast<double>(initial_alpha + step_size * drift);
}

AciState aci_step(AciState state, bool covered) {
  const double err = covered ? 0.0 : 1.0;
  const double increment = state.step_size * (state.target_alpha - err);
  const double head = state.head + increment;
  state.carry += std::abs(state.head) >= std::abs(increment) ? (state.head - head) + increment
                                                             : (increment - head) + state.head;
  state.head = head;
  state.working_alpha = head + state.carry;
  state.errors += covered ? 0 : 1;
  state.steps += 1;
  return state;
}

Interval aci_interval_sorted(double forecast, std::span<const double> sorted,
                             const AciState& state, ScoreRange range) {
  const double level = 1.0 - state.target_alpha;
  if (state.working_alpha <= 0.0) {
    return full_range_interval(forecast, level, Method::Aci, range);
  }
  if (state.working_alpha >= 1.0) {
    Interval out = make_interval(forecast, 0.0, level, Method::Aci, range);
    out.degenerate = true;
    return out;
  }
  const auto q = conformal_quantile_sorted(sorted, state.working_alpha);
  if (q.unbounded) {
    return full_range_interval(forecast, level, Method::Aci, range);
  }
  return make_interval(forecast, q.value, level, Method::Aci, range);
}

Interval aci_interval(double forecast, const CalibrationSet& cal, const AciState& state,
                      ScoreRange range) {
  return aci_interval_sorted(forecast, cal.residuals(), state, range);
}

AciRunner::AciRunner(const CalibrationSet& initial, double target_alpha, AciOptions options,
                     ScoreRange range)
    : AciRunner(initial.residuals(), target_alpha, options, range) {}

AciRunner::AciRunner(std::span<const double> chronological, double target_alpha,
                     AciOptions options, ScoreRange range)
    : state_(AciState::start(target_alpha, options.step_size)),
      options_(options),
      range_(range),
      window_(chronological.begin(), chronological.end()),
      sorted_(chronological.begin(), chronological.end()) {
  require(!chronological.empty(), "ACI needs a nonempty initial calibration set");
  require(options.horizon >= 1, "ACI horizon must be at least one step");
  for (double r : chronological) {
    require(std::isfinite(r) && r >= 0.0, "nonconformity residuals must be finite and >= 0");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

void AciRunner::push_residual(double residual) {
  const double oldest = window_.front();
  window_.pop_front();
  sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), oldest));
  window_.push_back(residual);
  sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), residual), residual);
}

std::optional<bool> AciRunner::reveal(std::size_t step, double actual) {
  if (step < options_.horizon) {
    return std::nullopt;
  }
  const auto it = pending_.find(step - options_.horizon);
  if (it == pending_.end()) {
    return std::nullopt;
  }
  const bool covered = it->second.interval.contains(actual);
  state_ = aci_step(state_, covered);
  if (options_.recalibrate) {
    push_residual(std::abs(actual - it->second.forecast));
  }
  pending_.erase(it);
  return covered;
}

Interval AciRunner::issue(std::size_t step, double forecast) {
  const Interval interval = aci_interval_sorted(forecast, sorted_, state_, range_);
  pending_[step] = Pending{interval, forecast};
  return interval;
}

}  // namespace pulsecal::conformal
