#pragma once

#include "msboot/geometry.hpp"

namespace msboot {

// P-value formulas for the problem of regions. Everything here is a pure
// function of the geometry; ratios of normal tails are evaluated in log
// space so deep-tail geometries keep relative precision.

// One-tailed z-test p-value.
double z_pvalue(double z);

// z-test p-value conditioned on the selection event Z > c. Requires z > c.
double selective_z_pvalue(double z, double c);

// Bayesian-flavored bootstrap probability of the region.
double bp_from_geometry(const Geometry& g);

// Frequentist approximately unbiased p-value.
double au_from_geometry(const Geometry& g);

// Selective p-value for testing the region from outside (requires beta0 > 0).
double si_outside(const Geometry& g);

// Selective p-value for testing the complement from inside (requires beta0 <= 0).
double si_inside(const Geometry& g);

// Orientation-normalized selective p-value: si_outside when beta0 > 0,
// 1 - si_inside otherwise.
double si_prime(const Geometry& g);

// Selective p-value for a general selection event with nearly parallel
// boundary surfaces: h carries the null region's geometry, beta0_s the
// selective region's signed distance.
double si_general(const Geometry& h, double beta0_s);

// Inverts (bp, au) back to the geometry. Exact algebraic inverse of
// bp_from_geometry / au_from_geometry.
Geometry geometry_from_bp_au(double bp, double au);

// All three p-values with delta-method standard errors when the geometry
// carries them.
PValueTriple pvalues_from_geometry(const Geometry& g);

} // namespace msboot
