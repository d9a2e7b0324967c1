#pragma once

namespace msboot {

// Standard-normal kernels used throughout. upper_tail keeps full relative
// precision into the far tail (erfc-backed up to x=8, Mills-ratio continued
// fraction beyond), and the log variant stays finite long after upper_tail
// itself underflows, so ratios of two tiny tails can be formed safely.

double normal_pdf(double x);
double log_normal_pdf(double x);

// P(Z > x) for Z ~ N(0,1).
double upper_tail(double x);

// log P(Z > x); finite for any representable x.
double log_upper_tail(double x);

// Inverse of upper_tail on (0,1). Throws msboot::numeric_error outside the
// open interval. Round-trips with upper_tail to ~1e-14 relative error.
double upper_tail_inverse(double p);

// upper_tail(a) / upper_tail(b), evaluated in log space.
double tail_ratio(double a, double b);

// Hazard function phi(x) / upper_tail(x), also log-space stable.
double normal_hazard(double x);

// Clamps to the open interval (0,1): probabilities reported by this library
// are never exactly 0 or 1 for finite inputs.
double clamp_probability(double p);

} // namespace msboot
