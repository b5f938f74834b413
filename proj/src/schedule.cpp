#include "dpvi/schedule.hpp"

#include <cmath>
#include <sstream>

namespace dpvi {

double StepSchedule::alpha(std::int64_t k) const {
  return alpha_bar * std::pow(static_cast<double>(k), -c1);
}

double StepSchedule::gamma(std::int64_t k) const {
  return gamma_bar * std::pow(static_cast<double>(k), -c2);
}

std::pair<double, double> step(const StepSchedule& s, std::int64_t k) {
  if (k < StepSchedule::k0) throw ValidationError("schedule: iterations are counted from 1");
  return {s.alpha(k), s.gamma(k)};
}

std::string ScheduleReport::describe() const {
  std::ostringstream os;
  os << "positive=" << (positive ? "yes" : "no")
     << " sum_diverges=" << (sum_diverges ? "yes" : "no")
     << " ratio_vanishes=" << (ratio_vanishes ? "yes" : "no")
     << " alpha_vanishes=" << (alpha_vanishes ? "yes" : "no")
     << " drift_vanishes=" << (drift_vanishes ? "yes" : "no")
     << " summable_sigma=" << (summable_sigma ? "yes" : "no");
  return os.str();
}

namespace {

// (alpha_{k-1} - alpha_k) / (gamma_k alpha_k^2), the regularization drift
// relative to the effective step.
double drift_term(const StepSchedule& s, std::int64_t k) {
  const double diff = s.alpha(k - 1) - s.alpha(k);
  const double ak = s.alpha(k);
  return diff / (s.gamma(k) * ak * ak);
}

}  // namespace

ScheduleReport validate(const StepSchedule& s, std::int64_t horizon) {
  if (horizon < 10) throw ValidationError("schedule: validation horizon must be >= 10");
  if (!(s.c1 >= 0.0) || !(s.c2 >= 0.0))
    throw ValidationError("schedule: exponents must be nonnegative");

  ScheduleReport r;
  r.positive = s.alpha_bar > 0.0 && s.gamma_bar > 0.0;
  r.sum_diverges = s.c1 + s.c2 <= 1.0;
  r.ratio_vanishes = s.c2 > s.c1;
  r.alpha_vanishes = s.c1 > 0.0;
  r.summable_sigma = s.c2 > 0.5;

  // The drift term scales like k^(c1+c2-1); it vanishes iff the exponent is
  // negative (or c1 = 0, which makes it identically zero). Confirm the tail
  // actually decreases over the requested horizon.
  const bool analytic = (s.c1 == 0.0) || (s.c1 + s.c2 < 1.0);
  bool numeric = true;
  if (r.positive && s.c1 > 0.0) {
    const double mid = drift_term(s, std::max<std::int64_t>(2, horizon / 2));
    const double end = drift_term(s, horizon);
    numeric = end <= mid * (1.0 + 1e-12);
  }
  r.drift_vanishes = analytic && numeric;
  return r;
}

}  // namespace dpvi
