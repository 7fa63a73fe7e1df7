#pragma once

namespace fairaudit {

// Distribution functions used by the significance tests. Accuracy targets:
// normal via erfc (~1e-15), incomplete beta via continued fraction (~1e-13).

double normal_cdf(double x);

/// P(|Z| >= |z|) for standard normal Z.
double normal_two_sided_p(double z);

/// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0,1].
double regularized_incomplete_beta(double x, double a, double b);

/// P(F > f) for F ~ F(d1, d2).
double f_upper_tail(double f, double d1, double d2);

/// P(|T| >= |t|) for Student t with df degrees of freedom (df may be fractional).
double student_t_two_sided_p(double t, double df);

}  // namespace fairaudit
