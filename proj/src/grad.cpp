#include "salab/grad.hpp"

#include <cmath>
#include <memory>

namespace salab {

Objective quadratic_objective() {
    return {"quadratic",
            [](const Vec& x, int) { return 0.5 * x.squaredNorm(); },
            [](const Vec& x, int) { return x; }};
}

Objective shifted_quadratic_objective(Vec state_values) {
    auto v = std::make_shared<Vec>(std::move(state_values));
    return {"shifted-quadratic",
            [v](const Vec& x, int z) {
                double d = x(0) - (*v)(z);
                return 0.5 * d * d;
            },
            [v](const Vec& x, int z) {
                Vec g(1);
                g(0) = x(0) - (*v)(z);
                return g;
            }};
}

Objective linear_state_objective(Vec state_values) {
    auto v = std::make_shared<Vec>(std::move(state_values));
    return {"linear-state",
            [v](const Vec& x, int z) { return x(0) * (*v)(z); },
            [v](const Vec&, int z) {
                Vec g(1);
                g(0) = (*v)(z);
                return g;
            }};
}

Objective quartic_objective() {
    return {"quartic",
            [](const Vec& x, int) {
                double u = x(0) * x(0) - 1.0;
                return 0.25 * u * u;
            },
            [](const Vec& x, int) {
                Vec g(1);
                g(0) = x(0) * x(0) * x(0) - x(0);
                return g;
            }};
}

Drift sgd_drift(const Objective& obj) {
    auto grad = obj.grad;
    return {"sgd:" + obj.name, [grad](const Vec& x, int z) { return Vec(-grad(x, z)); },
            0.0};
}

namespace {

Vec stationary_at(const ParamKernel& pk, const Vec& x) {
    Decomposition d = doeblin_decompose(pk.at(x));
    if (d.num_classes() != 1)
        throw ClassStructureChanged("averaged objective: kernel at x has " +
                                    std::to_string(d.num_classes()) +
                                    " closed classes");
    return d.extremals[0].weights();
}

} // namespace

double averaged_objective(const Objective& obj, const ParamKernel& pk, const Vec& x) {
    Vec pi = stationary_at(pk, x);
    double g = 0.0;
    for (Eigen::Index z = 0; z < pi.size(); ++z)
        if (pi(z) > 0.0) g += pi(z) * obj.f(x, int(z));
    return g;
}

GradientGap averaged_gradient_gap(const Objective& obj, const ParamKernel& pk,
                                  const Vec& x, double delta_outer) {
    const int d = int(x.size());
    Vec pi = stationary_at(pk, x);

    GradientGap out;
    out.lhs = Vec::Zero(d);
    for (Eigen::Index z = 0; z < pi.size(); ++z)
        if (pi(z) > 0.0) out.lhs += pi(z) * obj.grad(x, int(z));

    out.rhs.resize(d);
    out.chain_rule_term.resize(d);
    for (int i = 0; i < d; ++i) {
        Vec xp = x, xm = x;
        xp(i) += delta_outer;
        xm(i) -= delta_outer;
        out.rhs(i) = (averaged_objective(obj, pk, xp) -
                      averaged_objective(obj, pk, xm)) /
                     (2.0 * delta_outer);
        Vec dpi = (stationary_at(pk, xp) - stationary_at(pk, xm)) / (2.0 * delta_outer);
        double chain = 0.0;
        for (Eigen::Index z = 0; z < pi.size(); ++z)
            chain += obj.f(x, int(z)) * dpi(z);
        out.chain_rule_term(i) = chain;
    }
    out.gap = out.rhs - out.lhs;
    return out;
}

GSampler exact_averaged_sampler(Objective obj, ParamKernel pk) {
    return [obj = std::move(obj), pk = std::move(pk)](const Vec& x, CounterRng&) {
        return averaged_objective(obj, pk, x);
    };
}

GSampler stationary_one_sample_sampler(Objective obj, ParamKernel pk) {
    return [obj = std::move(obj), pk = std::move(pk)](const Vec& x, CounterRng& rng) {
        Vec pi = stationary_at(pk, x);
        int z = rng.categorical(pi, int(pi.size()));
        return obj.f(x, z);
    };
}

GSampler empirical_average_sampler(Objective obj, ParamKernel pk, long long steps) {
    return [obj = std::move(obj), pk = std::move(pk), steps](const Vec& x,
                                                             CounterRng& rng) {
        Kernel k = pk.at(x);
        int z = 0;
        double acc = 0.0;
        for (long long n = 0; n < steps; ++n) {
            z = rng.categorical(k.row(z), k.size());
            acc += obj.f(x, z);
        }
        return acc / double(steps);
    };
}

Vec kw_gradient(const GSampler& g, const Vec& x, double delta, int reps,
                CounterRng& rng) {
    if (!(delta > 0.0)) throw NonFiniteInput("kw_gradient: delta must be positive");
    const int d = int(x.size());
    Vec grad = Vec::Zero(d);
    for (int i = 0; i < d; ++i) {
        Vec xp = x, xm = x;
        xp(i) += delta;
        xm(i) -= delta;
        double acc = 0.0;
        for (int r = 0; r < reps; ++r)
            acc += (g(xp, rng) - g(xm, rng)) / (2.0 * delta);
        grad(i) = acc / double(reps);
    }
    return grad;
}

Vec spsa_gradient(const GSampler& g, const Vec& x, double delta, int reps,
                  CounterRng& rng) {
    if (!(delta > 0.0)) throw NonFiniteInput("spsa_gradient: delta must be positive");
    const int d = int(x.size());
    Vec grad = Vec::Zero(d);
    Vec signs(d);
    for (int r = 0; r < reps; ++r) {
        for (int i = 0; i < d; ++i) signs(i) = double(rng.rademacher());
        double diff = (g(x + delta * signs, rng) - g(x - delta * signs, rng)) /
                      (2.0 * delta);
        for (int i = 0; i < d; ++i) grad(i) += diff / signs(i);
    }
    return grad / double(reps);
}

} // namespace salab
