#pragma once

#include <cstddef>
#include <span>

namespace probelens::stats {

/// Smallest p-value reported as a number; anything below is floored here.
inline constexpr double kPValueFloor = 1e-12;

/// I_x(a, b) by Lentz's continued fraction, converged to 1e-15 relative.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p = P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
/// Returns exactly 1 at t = 0 and 0 for infinite t.
double student_t_two_sided_p(double t, double dof);

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;       // unfloored
  std::size_t dof = 0;
  double residual_ss = 0.0;
};

/// Simple linear regression of y on x with a two-sided t-test of slope = 0.
/// Throws InsufficientDataError for fewer than 3 points and
/// DegenerateInputError when x has zero variance.
OlsFit ols(std::span<const double> x, std::span<const double> y);

}  // namespace probelens::stats
