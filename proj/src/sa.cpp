#include "salab/sa.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "salab/csv.hpp"

namespace salab {

ScheduleCheck validate_schedule(const StepSchedule& s) {
    if (!(s.c > 0.0)) return {false, "c <= 0"};
    if (s.offset < 1) return {false, "offset < 1"};
    if (s.gamma <= 0.5) return {false, "Σa(n)² = ∞"};
    if (s.gamma > 1.0) return {false, "Σa(n) < ∞"};
    return {true, ""};
}

Vec MartingaleNoise::sample(const Vec& x, CounterRng& rng) const {
    const int d = int(x.size());
    switch (family) {
        case Family::None:
            return Vec::Zero(d);
        case Family::GaussianScaled: {
            double sigma = scale * std::sqrt(1.0 + x.squaredNorm());
            Vec m(d);
            for (int i = 0; i < d; ++i) m(i) = sigma * rng.normal();
            return m;
        }
        case Family::BoundedUniform: {
            // Uniform on [-sigma sqrt(3), sigma sqrt(3)] matches the variance.
            double half = scale * std::sqrt(3.0 * (1.0 + x.squaredNorm()));
            Vec m(d);
            for (int i = 0; i < d; ++i) m(i) = rng.uniform(-half, half);
            return m;
        }
    }
    return Vec::Zero(d);
}

Vec sa_step(const Vec& x, int z, double a, const Drift& drift,
            const MartingaleNoise& mn, double radius, CounterRng& rng) {
    if (!(a >= 0.0) || !x.allFinite())
        throw NonFiniteInput("sa_step: non-finite input or negative step");
    Vec h = drift.h(x, z);
    if (!h.allFinite()) throw NonFiniteDrift("sa_step: drift returned non-finite value");
    Vec y = x + a * (h + mn.sample(x, rng));
    double norm = y.norm();
    if (norm > radius) y *= radius / norm;
    return y;
}

SaRun run_sa(const RunConfig& config) {
    if (!config.schedule_override) {
        ScheduleCheck check = validate_schedule(config.schedule);
        if (!check.ok) throw InvalidSchedule("run_sa: " + check.reason);
    }

    CounterRng rng(config.seed, config.stream);
    NoiseProcess noise(config.noise);

    SaRun run;
    run.seed = config.seed;
    run.stream = config.stream;
    run.schedule = config.schedule;
    run.horizon = config.horizon;
    run.radius = config.radius;
    run.dim = config.dim;

    Vec x = config.x0.size() == config.dim ? config.x0 : Vec::Zero(config.dim);
    if (x.norm() > config.radius) x *= config.radius / x.norm();
    int z = noise.state();
    double t = 0.0;

    const long long n_steps = config.horizon;
    const long long stride = std::max<long long>(1, (n_steps + 9999) / 10000);

    run.samples.push_back({0, 0.0, x, z});
    if (config.record_full_noise) {
        run.z_full.reserve(std::size_t(n_steps) + 1);
        run.z_full.push_back(z);
    }
    long long last_violation = -1;
    if (config.settle && (x - config.settle->target).norm() >= config.settle->tol)
        last_violation = 0;

    for (long long n = 0; n < n_steps; ++n) {
        int z_next = noise.sample_next(x, rng);
        double a = config.schedule.at(n);
        x = sa_step(x, z, a, config.drift, config.martingale, config.radius, rng);
        t += a;
        z = z_next;
        const long long m = n + 1;
        if (config.record_full_noise) run.z_full.push_back(z);
        if (m % stride == 0 || m <= config.dense_prefix || m == n_steps)
            if (run.samples.back().n != m) run.samples.push_back({m, t, x, z});
        if (config.settle && (x - config.settle->target).norm() >= config.settle->tol)
            last_violation = m;
    }
    run.final_x = x;
    run.final_t = t;
    if (config.settle) run.settle_entry = last_violation + 1;
    return run;
}

InterpolatedPath::InterpolatedPath(const SaRun& run) {
    if (run.samples.size() < 2)
        throw OutOfDomain("InterpolatedPath: run has fewer than 2 samples");
    t_.reserve(run.samples.size());
    x_.reserve(run.samples.size());
    for (const auto& s : run.samples) {
        t_.push_back(s.t);
        x_.push_back(s.x);
    }
}

InterpolatedPath::InterpolatedPath(std::vector<double> t, std::vector<Vec> x)
    : t_(std::move(t)), x_(std::move(x)) {
    if (t_.size() < 2 || t_.size() != x_.size())
        throw OutOfDomain("InterpolatedPath: need >= 2 matching samples");
}

Vec InterpolatedPath::at(double t) const {
    if (t < t_.front() - 1e-12 || t > t_.back() + 1e-12)
        throw OutOfDomain("InterpolatedPath::at: t = " + std::to_string(t) +
                          " outside [" + std::to_string(t_.front()) + ", " +
                          std::to_string(t_.back()) + "]");
    t = std::clamp(t, t_.front(), t_.back());
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    if (it == t_.begin()) return x_.front();
    if (it == t_.end()) return x_.back();
    std::size_t hi = std::size_t(it - t_.begin());
    std::size_t lo = hi - 1;
    double span = t_[hi] - t_[lo];
    if (span <= 0.0) return x_[lo];
    double w = (t - t_[lo]) / span;
    return (1.0 - w) * x_[lo] + w * x_[hi];
}

void export_run_csv(const SaRun& run, std::ostream& out) {
    out << "n,t";
    for (int i = 0; i < run.dim; ++i) out << ",x_" << i;
    out << ",z\n";
    for (const auto& s : run.samples) {
        out << s.n << ',' << csv_num(s.t);
        for (int i = 0; i < run.dim; ++i) out << ',' << csv_num(s.x(i));
        out << ',' << s.z << '\n';
    }
}

} // namespace salab
