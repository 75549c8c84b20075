#pragma once

#include <span>

#include "swvi/rng.hpp"
#include "swvi/types.hpp"

namespace swvi {

// m i.i.d. uniform directions on S^{d-1}, each a normalized standard-normal
// d-vector. Deterministic given the stream state.
ProjectionSet sample_projections(int d, int m, RngStream rng);

// ((1/n) sum_j |sort(xs)_j - sort(ys)_j|^p)^(1/p)
double wasserstein_1d(std::span<const double> xs, std::span<const double> ys, double p);

// Sample-based SW_p between two equal-size clouds over the given projections.
// With want_grad, grad_x is the subgradient w.r.t. the first cloud, treating
// the per-slice sorting permutations as locally constant (ties broken by
// stable sort on the original index). At value 0 with p > 1 the subgradient
// is all-zeros.
SwEvaluation sliced_wasserstein(const ParticleCloud& x, const ParticleCloud& y,
                                const ProjectionSet& proj, double p, bool want_grad = false);

}  // namespace swvi
