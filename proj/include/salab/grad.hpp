#pragma once

#include <functional>
#include <string>

#include "salab/noise.hpp"
#include "salab/sa.hpp"

namespace salab {

/// Per-state objective F(x, z) with its analytic gradient in x.
struct Objective {
    std::string name;
    std::function<double(const Vec& x, int z)> f;
    std::function<Vec(const Vec& x, int z)> grad;
};

/// F = |x|^2 / 2.
Objective quadratic_objective();
/// d = 1, F = (x - v(z))^2 / 2 with per-state values v.
Objective shifted_quadratic_objective(Vec state_values);
/// d = 1, F = x * v(z).
Objective linear_state_objective(Vec state_values);
/// d = 1, F = (x^2 - 1)^2 / 4.
Objective quartic_objective();

/// SGD drift h(x, z) = -grad F(x, z), pluggable into the SA engine.
Drift sgd_drift(const Objective& obj);

/// Averaged objective G(x) = sum_z F(x, z) pi_x(z) where pi_x is the unique
/// stationary law of pk at x.
double averaged_objective(const Objective& obj, const ParamKernel& pk, const Vec& x);

/// lhs = sum_z grad F(x,z) pi_x(z); rhs = central-difference gradient of the
/// averaged objective; gap = rhs - lhs; chain_rule_term recomputes the gap as
/// sum_z F(x,z) d pi_x(z)/dx by differencing the stationary law directly.
struct GradientGap {
    Vec lhs, rhs, gap, chain_rule_term;
};
GradientGap averaged_gradient_gap(const Objective& obj, const ParamKernel& pk,
                                  const Vec& x, double delta_outer = 1e-4);

/// Possibly noisy evaluator of x -> averaged objective.
using GSampler = std::function<double(const Vec& x, CounterRng& rng)>;

/// Deterministic sampler returning the exact averaged objective.
GSampler exact_averaged_sampler(Objective obj, ParamKernel pk);
/// Unbiased one-sample estimate F(x, Z) with Z drawn from pi_x.
GSampler stationary_one_sample_sampler(Objective obj, ParamKernel pk);
/// Long-run empirical average of F along the chain at frozen x.
GSampler empirical_average_sampler(Objective obj, ParamKernel pk, long long steps);

/// Kiefer-Wolfowitz: coordinate-wise central differences, each averaged over
/// `reps` evaluations. Bias O(delta^2).
Vec kw_gradient(const GSampler& g, const Vec& x, double delta, int reps,
                CounterRng& rng);

/// SPSA with Rademacher perturbations: two evaluations per rep regardless of
/// dimension; coincides with KW exactly when d = 1.
Vec spsa_gradient(const GSampler& g, const Vec& x, double delta, int reps,
                  CounterRng& rng);

} // namespace salab
