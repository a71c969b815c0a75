#include <doctest.h>

#include <cmath>

#include "salab/grad.hpp"
#include "salab/sa.hpp"

using namespace salab;

namespace {

Kernel make_kernel(std::initializer_list<std::initializer_list<double>> rows) {
    Mat m(rows.size(), rows.size());
    int i = 0;
    for (const auto& r : rows) {
        int j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return Kernel(std::move(m));
}

Vec vec1(double v) { return Vec::Constant(1, v); }

Vec zero_one() {
    Vec v(2);
    v << 0.0, 1.0;
    return v;
}

double dsigma(double t) {
    double s = logistic(t);
    return s * (1.0 - s);
}

} // namespace

TEST_CASE("SGD drifts negate the analytic gradient") {
    Drift quad = sgd_drift(quadratic_objective());
    CHECK(quad.h(vec1(1.5), 0)(0) == doctest::Approx(-1.5).epsilon(1e-15));
    Vec x2(2);
    x2 << 0.5, -2.0;
    Vec h2 = quad.h(x2, 0);
    CHECK(h2(0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(h2(1) == doctest::Approx(2.0).epsilon(1e-15));

    Drift shifted = sgd_drift(shifted_quadratic_objective(zero_one()));
    CHECK(shifted.h(vec1(0.2), 1)(0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(shifted.h(vec1(0.2), 0)(0) == doctest::Approx(-0.2).epsilon(1e-15));
}

TEST_CASE("analytic gradients match central differences") {
    CounterRng rng(31, 0);
    auto audit = [&](const Objective& obj, int dim, int states) {
        const double delta = 1e-5;
        for (int trial = 0; trial < 100; ++trial) {
            Vec x(dim);
            for (int i = 0; i < dim; ++i) x(i) = rng.uniform(-2, 2);
            int z = int(rng.uniform01() * states);
            Vec g = obj.grad(x, z);
            for (int i = 0; i < dim; ++i) {
                Vec xp = x, xm = x;
                xp(i) += delta;
                xm(i) -= delta;
                double fd = (obj.f(xp, z) - obj.f(xm, z)) / (2 * delta);
                CHECK(std::abs(g(i) - fd) <= 1e-5 * (1.0 + std::abs(fd)));
            }
        }
    };
    audit(quadratic_objective(), 2, 1);
    audit(shifted_quadratic_objective(zero_one()), 1, 2);
    audit(linear_state_objective(zero_one()), 1, 2);
    audit(quartic_objective(), 1, 1);
}

TEST_CASE("averaged gradient gap on the logistic tilt testbed") {
    ParamKernel tilt = ParamKernel::logistic_tilt(vec1(1.0));
    Objective obj = linear_state_objective(zero_one());

    // pi_x(1) = sigma(x), so lhs = sigma(x) and gap = x sigma'(x).
    GradientGap at1 = averaged_gradient_gap(obj, tilt, vec1(1.0));
    CHECK(std::abs(at1.lhs(0) - logistic(1.0)) <= 1e-10);
    CHECK(std::abs(at1.gap(0) - dsigma(1.0)) <= 1e-4);
    CHECK(std::abs(at1.gap(0) - at1.chain_rule_term(0)) <= 1e-4);
    // closed form sigma'(1) = e/(1+e)^2
    double e = std::exp(1.0);
    CHECK(std::abs(dsigma(1.0) - e / ((1.0 + e) * (1.0 + e))) <= 1e-15);

    GradientGap at0 = averaged_gradient_gap(obj, tilt, vec1(0.0));
    CHECK(std::abs(at0.gap(0)) <= 1e-6);

    // x-independent kernel: the gap vanishes.
    ParamKernel frozen = ParamKernel::constant(tilt.at(vec1(1.0)));
    GradientGap constant = averaged_gradient_gap(obj, frozen, vec1(1.0));
    CHECK(std::abs(constant.gap(0)) <= 1e-6);
}

TEST_CASE("Kiefer-Wolfowitz finite differences") {
    CounterRng rng(41, 0);
    GSampler square = [](const Vec& x, CounterRng&) { return x(0) * x(0); };
    CHECK(std::abs(kw_gradient(square, vec1(1.0), 0.3, 1, rng)(0) - 2.0) <= 1e-12);

    GSampler cube = [](const Vec& x, CounterRng&) { return x(0) * x(0) * x(0); };
    CHECK(std::abs(kw_gradient(cube, vec1(1.0), 0.1, 1, rng)(0) - 3.01) <= 1e-12);

    CHECK_THROWS_AS(kw_gradient(square, vec1(1.0), 0.0, 1, rng), NonFiniteInput);
}

TEST_CASE("KW standard error under unit evaluation noise") {
    const double delta = 0.5;
    const int reps = 10000;
    GSampler noisy = [](const Vec& x, CounterRng& rng) {
        return x(0) * x(0) + rng.normal();
    };
    // Predicted SE of the averaged central difference: 1/(delta sqrt(2 reps)).
    double predicted = 1.0 / (delta * std::sqrt(2.0 * reps));
    const int trials = 200;
    double sum = 0.0, sq = 0.0;
    for (int t = 0; t < trials; ++t) {
        CounterRng rng(51, std::uint64_t(t));
        double g = kw_gradient(noisy, vec1(1.0), delta, reps, rng)(0);
        sum += g;
        sq += g * g;
    }
    double mean = sum / trials;
    double sd = std::sqrt(sq / trials - mean * mean);
    CHECK(sd <= predicted * 1.1 * 1.2); // spec slack times sampling slack
    CHECK(std::abs(mean - 2.0) <= 4.0 * predicted / std::sqrt(double(trials)));
}

TEST_CASE("SPSA estimates") {
    // d = 1 linear objective: every single-rep estimate is exactly the slope.
    GSampler slope = [](const Vec& x, CounterRng&) { return 3.0 * x(0); };
    CounterRng rng(61, 0);
    Vec g = spsa_gradient(slope, vec1(0.4), 0.7, 1, rng);
    CHECK(std::abs(g(0) - 3.0) <= 1e-12);

    Vec x(2);
    x << 0.4, -1.0;

    // Quadratic: single-rep estimate is x_i + sum_{j != i} D_j x_j / D_i,
    // whose average over the 4 sign patterns at d = 2 is exactly x_i.
    auto single_rep = [&](double d0, double d1, int i) {
        return x(i) + (i == 0 ? d1 * x(1) / d0 : d0 * x(0) / d1);
    };
    for (int i = 0; i < 2; ++i) {
        double avg = 0.0;
        for (double d0 : {-1.0, 1.0})
            for (double d1 : {-1.0, 1.0}) avg += 0.25 * single_rep(d0, d1, i);
        CHECK(std::abs(avg - x(i)) <= 1e-15);
    }

    // Monte Carlo agreement on the quadratic.
    GSampler quad = [](const Vec& y, CounterRng&) { return 0.5 * y.squaredNorm(); };
    CounterRng rng2(62, 0);
    Vec est = spsa_gradient(quad, x, 0.1, 20000, rng2);
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(est(i) - x(i)) <= 3.0 * 1.5 / std::sqrt(20000.0));

    CHECK_THROWS_AS(spsa_gradient(quad, x, -1.0, 1, rng2), NonFiniteInput);
}

TEST_CASE("SPSA coincides with KW bitwise at d = 1") {
    GSampler cube = [](const Vec& y, CounterRng&) {
        return y(0) * y(0) * y(0) - 2.0 * y(0);
    };
    for (int t = 0; t < 20; ++t) {
        CounterRng rng_kw(71, std::uint64_t(t));
        CounterRng rng_sp(71, std::uint64_t(t));
        double kw = kw_gradient(cube, vec1(0.3 * t - 2.0), 0.05, 7, rng_kw)(0);
        double sp = spsa_gradient(cube, vec1(0.3 * t - 2.0), 0.05, 7, rng_sp)(0);
        CHECK(kw == sp);
    }
}

TEST_CASE("samplers for the averaged objective") {
    ParamKernel tilt = ParamKernel::logistic_tilt(vec1(1.0));
    Objective obj = linear_state_objective(zero_one());
    Vec x = vec1(0.8);
    double exact = averaged_objective(obj, tilt, x); // x sigma(x)
    CHECK(std::abs(exact - 0.8 * logistic(0.8)) <= 1e-12);

    CounterRng rng(81, 0);
    GSampler direct = exact_averaged_sampler(obj, tilt);
    CHECK(direct(x, rng) == exact);

    GSampler one_shot = stationary_one_sample_sampler(obj, tilt);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += one_shot(x, rng);
    CHECK(std::abs(acc / n - exact) <= 4.0 * 0.8 / std::sqrt(double(n)));

    GSampler longrun = empirical_average_sampler(obj, tilt, 200000);
    CHECK(std::abs(longrun(x, rng) - exact) <= 0.01);
}

TEST_CASE("averaged SGD and minima of the averaged objective differ") {
    // F(x,z) = (x - v(z))^2 / 2 under the logistic tilt: the zero of the
    // averaged gradient field solves x = sigma(x), while the minimum of
    // G(x) = sum F pi_x carries the extra chain-rule term.
    ParamKernel tilt = ParamKernel::logistic_tilt(vec1(1.0));
    Objective obj = shifted_quadratic_objective(zero_one());

    auto lhs_field = [&](double x) { return x - logistic(x); };
    double a = 0.0, b = 1.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (a + b);
        (lhs_field(mid) < 0 ? a : b) = mid;
    }
    double lhs_zero = 0.5 * (a + b);
    CHECK(std::abs(lhs_field(lhs_zero)) <= 1e-12);

    auto dG = [&](double x) {
        const double d = 1e-6;
        return (averaged_objective(obj, tilt, vec1(x + d)) -
                averaged_objective(obj, tilt, vec1(x - d))) /
               (2 * d);
    };
    a = 0.0;
    b = 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (a + b);
        (dG(mid) < 0 ? a : b) = mid;
    }
    double g_min = 0.5 * (a + b);
    CHECK(std::abs(lhs_zero - g_min) >= 0.05);

    // SA with the per-sample SGD drift lands on the lhs zero, not on g_min.
    RunConfig rc;
    rc.dim = 1;
    rc.x0 = Vec::Zero(1);
    rc.drift = sgd_drift(obj);
    rc.noise = NoiseSpec{MarkovSpec{tilt}, 0};
    rc.schedule = {1.0, 1.0, 1};
    rc.horizon = 500000;
    rc.seed = 5;
    SaRun run = run_sa(rc);
    CHECK(std::abs(run.final_x(0) - lhs_zero) <= 0.02);
    CHECK(std::abs(run.final_x(0) - g_min) >= 0.03);
}
