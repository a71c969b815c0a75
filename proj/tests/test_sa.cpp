#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "salab/csv.hpp"
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

Drift tracking_drift(Vec values) {
    auto v = std::make_shared<Vec>(std::move(values));
    return {"track",
            [v](const Vec& x, int z) {
                Vec h(1);
                h(0) = (*v)(z) - x(0);
                return h;
            },
            1.0};
}

RunConfig base_config() {
    RunConfig rc;
    rc.dim = 1;
    rc.x0 = Vec::Zero(1);
    Vec vals(2);
    vals << 0.0, 1.0;
    rc.drift = tracking_drift(vals);
    rc.noise = NoiseSpec{
        MarkovSpec{ParamKernel::constant(make_kernel({{0.9, 0.1}, {0.5, 0.5}}))}, 0};
    rc.schedule = {1.0, 1.0, 1};
    return rc;
}

} // namespace

TEST_CASE("schedule gate") {
    CHECK(validate_schedule({1.0, 1.0, 1}).ok);
    CHECK(validate_schedule({2.0, 0.75, 10}).ok);

    ScheduleCheck slow = validate_schedule({1.0, 0.5, 1});
    CHECK_FALSE(slow.ok);
    CHECK(slow.reason == "Σa(n)² = ∞");

    ScheduleCheck fast = validate_schedule({1.0, 1.2, 1});
    CHECK_FALSE(fast.ok);
    CHECK(fast.reason == "Σa(n) < ∞");

    CHECK_FALSE(validate_schedule({0.0, 1.0, 1}).ok);
    CHECK_FALSE(validate_schedule({1.0, 1.0, 0}).ok);
}

TEST_CASE("single update step") {
    CounterRng rng(0, 0);
    MartingaleNoise none;
    Drift linear{"neg", [](const Vec& x, int) { return Vec(-x); }, 1.0};
    Vec x = Vec::Constant(1, 2.0);
    Vec next = sa_step(x, 0, 0.5, linear, none, 1e3, rng);
    CHECK(next(0) == doctest::Approx(1.0).epsilon(1e-15));

    Vec vals(2);
    vals << 0.0, 1.0;
    Drift track = tracking_drift(vals);
    Vec zero = Vec::Zero(1);
    CHECK(sa_step(zero, 1, 0.1, track, none, 1e3, rng)(0) ==
          doctest::Approx(0.1).epsilon(1e-15));

    // Outward drift on the boundary projects back onto the ball.
    Drift outward{"out", [](const Vec& x, int) { return Vec(x); }, 1.0};
    Vec boundary = Vec::Constant(1, 2.0);
    Vec projected = sa_step(boundary, 0, 1.0, outward, none, 2.0, rng);
    CHECK(projected.norm() == doctest::Approx(2.0).epsilon(1e-12));

    Drift bad{"nan", [](const Vec& x, int) { return Vec(Vec::Constant(x.size(), std::nan(""))); },
              0.0};
    CHECK_THROWS_AS(sa_step(zero, 0, 0.1, bad, none, 1e3, rng), NonFiniteDrift);
}

TEST_CASE("run converges to the stationary mean") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RunConfig rc = base_config();
        rc.horizon = 1000000;
        rc.seed = seed;
        SaRun run = run_sa(rc);
        if (std::abs(run.final_x(0) - 1.0 / 6.0) < 0.02) ++hits;
    }
    CHECK(hits >= 19);
}

TEST_CASE("degenerate and frozen runs") {
    RunConfig rc = base_config();
    rc.horizon = 1000;
    rc.x0 = Vec::Constant(1, 0.7);
    rc.schedule = {0.0, 1.0, 1}; // a == 0, bypassing the gate
    rc.schedule_override = true;
    SaRun still = run_sa(rc);
    CHECK(still.final_x(0) == 0.7);

    // Invalid schedule without the override is rejected.
    RunConfig bad = base_config();
    bad.schedule = {1.0, 0.4, 1};
    CHECK_THROWS_AS(run_sa(bad), InvalidSchedule);

    // Noise frozen at z* = 1: the iterate tracks the running mean toward 1.
    RunConfig frozen = base_config();
    frozen.noise = NoiseSpec{
        MarkovSpec{ParamKernel::constant(make_kernel({{1.0, 0.0}, {0.0, 1.0}}))}, 1};
    frozen.horizon = 10000;
    SaRun fixed = run_sa(frozen);
    CHECK(std::abs(fixed.final_x(0) - 1.0) <= 1e-3);
}

TEST_CASE("martingale noise moment bounds") {
    Vec x = Vec::Constant(1, 2.0);
    for (auto family : {MartingaleNoise::Family::GaussianScaled,
                        MartingaleNoise::Family::BoundedUniform}) {
        MartingaleNoise mn{family, 0.7};
        CounterRng rng(13, 1);
        const int n = 100000;
        double sum = 0.0, sq = 0.0;
        double sigma2 = mn.scale * mn.scale * (1.0 + x.squaredNorm());
        for (int i = 0; i < n; ++i) {
            double m = mn.sample(x, rng)(0);
            sum += m;
            sq += m * m;
        }
        CHECK(std::abs(sum / n) <= 4.0 * std::sqrt(sigma2) / std::sqrt(double(n)));
        CHECK(sq / n <= sigma2 * 1.05);
    }
}

TEST_CASE("projection safety and monotone time") {
    RunConfig rc = base_config();
    rc.radius = 0.1;
    rc.horizon = 20000;
    rc.martingale = {MartingaleNoise::Family::GaussianScaled, 2.0};
    SaRun run = run_sa(rc);
    double prev_t = -1.0;
    for (const auto& s : run.samples) {
        CHECK(s.x.norm() <= rc.radius + 1e-12);
        CHECK(s.t > prev_t);
        prev_t = s.t;
    }
    // gamma = 1 divergence surrogate.
    double n0 = double(rc.schedule.offset);
    CHECK(run.final_t >=
          rc.schedule.c * (std::log(double(rc.horizon) + n0) - std::log(n0)) - 1e-9);
}

TEST_CASE("runs are bitwise reproducible") {
    RunConfig rc = base_config();
    rc.horizon = 50000;
    rc.seed = 123;
    rc.stream = 4;
    rc.record_full_noise = true;
    SaRun a = run_sa(rc);
    SaRun b = run_sa(rc);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].n == b.samples[i].n);
        CHECK(a.samples[i].x(0) == b.samples[i].x(0));
        CHECK(a.samples[i].z == b.samples[i].z);
    }
    CHECK(a.final_x(0) == b.final_x(0));
    CHECK(a.z_full == b.z_full);
}

TEST_CASE("interpolated paths") {
    std::vector<double> t{0.0, 1.0};
    std::vector<Vec> x{Vec::Constant(1, 0.0), Vec::Constant(1, 1.0)};
    InterpolatedPath path(t, x);
    CHECK(path.at(0.5)(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(path.at(1.0)(0) == 1.0);
    CHECK_THROWS_AS(path.at(1.5), OutOfDomain);

    std::vector<Vec> flat{Vec::Constant(1, 0.3), Vec::Constant(1, 0.3)};
    InterpolatedPath constant(t, flat);
    CHECK(constant.at(0.77)(0) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("run CSV export") {
    RunConfig rc = base_config();
    rc.horizon = 10;
    SaRun run = run_sa(rc);
    std::ostringstream out;
    export_run_csv(run, out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "n,t,x_0,z");
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == int(run.samples.size()));
}

TEST_CASE("settle probe reports the last excursion") {
    RunConfig rc = base_config();
    rc.horizon = 100000;
    rc.settle = SettleProbe{Vec::Constant(1, 1.0 / 6.0), 0.05};
    SaRun run = run_sa(rc);
    CHECK(run.settle_entry >= 0);
    CHECK(run.settle_entry < rc.horizon);
}
