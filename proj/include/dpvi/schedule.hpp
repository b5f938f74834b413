#pragma once
// Power-law regularization and step-size sequences alpha_k = abar*k^(-c1),
// gamma_k = gbar*k^(-c2), k counted from 1, with the validity conditions the
// convergence theory requires.

#include <cstdint>
#include <string>
#include <utility>

#include "dpvi/types.hpp"

namespace dpvi {

struct StepSchedule {
  double alpha_bar = 0.1;
  double gamma_bar = 0.01;
  double c1 = 0.3;
  double c2 = 0.52;
  // Iterations are indexed from k0 = 1; the power law is singular at 0.
  static constexpr std::int64_t k0 = 1;

  double alpha(std::int64_t k) const;
  double gamma(std::int64_t k) const;
};

// (alpha_k, gamma_k). Throws ValidationError for k < 1.
std::pair<double, double> step(const StepSchedule& s, std::int64_t k);

struct ScheduleReport {
  bool positive = false;        // alpha_bar > 0 and gamma_bar > 0
  bool sum_diverges = false;    // sum_k gamma_k*alpha_k = inf        (c1+c2 <= 1)
  bool ratio_vanishes = false;  // gamma_k/alpha_k -> 0               (c2 > c1)
  bool alpha_vanishes = false;  // alpha_k -> 0                       (c1 > 0)
  bool drift_vanishes = false;  // (alpha_{k-1}-alpha_k)/(gamma_k*alpha_k^2) -> 0
  bool summable_sigma = false;  // c2 > 1/2, extra flag
  bool valid() const {
    return positive && sum_diverges && ratio_vanishes && alpha_vanishes && drift_vanishes;
  }
  std::string describe() const;
};

// Checks the four conditions analytically for the power-law family and
// verifies the drift ratio numerically over the horizon (monotone decrease of
// the tail; the term scales like k^(c1+c2-1)). horizon >= 10.
ScheduleReport validate(const StepSchedule& s, std::int64_t horizon);

}  // namespace dpvi
