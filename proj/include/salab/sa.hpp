#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "salab/noise.hpp"

namespace salab {

/// Robbins-Monro family a(n) = c / (n + offset)^gamma.
struct StepSchedule {
    double c = 1.0;
    double gamma = 1.0;
    long long offset = 1;

    double at(long long n) const { return c / std::pow(double(n + offset), gamma); }
};

struct ScheduleCheck {
    bool ok = false;
    std::string reason; // violated condition when rejected
};

/// Accepts iff gamma in (1/2, 1], c > 0 and offset > 0.
ScheduleCheck validate_schedule(const StepSchedule& schedule);

struct Drift {
    std::string name;
    std::function<Vec(const Vec& x, int z)> h;
    double lipschitz_bound = 0.0;
};

/// Conditionally mean-zero additive noise with second moment bounded by
/// scale^2 * (1 + |x|^2).
struct MartingaleNoise {
    enum class Family { None, GaussianScaled, BoundedUniform };
    Family family = Family::None;
    double scale = 0.0;

    double moment_bound() const { return scale * scale; }
    Vec sample(const Vec& x, CounterRng& rng) const;
};

/// Online watcher for the last step at which |x - target| >= tol.
struct SettleProbe {
    Vec target;
    double tol = 0.05;
};

struct RunConfig {
    int dim = 1;
    Vec x0; // defaults to zero
    Drift drift;
    NoiseSpec noise;
    StepSchedule schedule;
    MartingaleNoise martingale;
    long long horizon = 100000;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0; // replica index
    double radius = 1e3;      // projection ball
    bool record_full_noise = false;
    long long dense_prefix = 1000; // first steps recorded densely
    std::optional<SettleProbe> settle;
    bool schedule_override = false; // test-only bypass of validate_schedule
};

struct SaSample {
    long long n;
    double t; // algorithmic time sum_{k<n} a(k)
    Vec x;
    int z;
};

struct SaRun {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    StepSchedule schedule;
    long long horizon = 0;
    double radius = 0.0;
    int dim = 1;
    std::vector<SaSample> samples; // strictly increasing in n
    Vec final_x;
    double final_t = 0.0;
    std::vector<int> z_full;    // full noise path when recorded
    long long settle_entry = -1; // first n after which the probe never fires
};

/// One update x + a (h(x, z) + M), projected onto the ball of radius R.
Vec sa_step(const Vec& x, int z, double a, const Drift& drift,
            const MartingaleNoise& mn, double radius, CounterRng& rng);

/// Executes the recursion for `horizon` steps. Z(n+1) is sampled with x(n)
/// before x(n+1) is computed. Bitwise reproducible given (seed, stream).
SaRun run_sa(const RunConfig& config);

/// Piecewise-linear interpolation of a recorded run over algorithmic time.
class InterpolatedPath {
public:
    explicit InterpolatedPath(const SaRun& run);
    InterpolatedPath(std::vector<double> t, std::vector<Vec> x);

    double tmin() const { return t_.front(); }
    double tmax() const { return t_.back(); }
    Vec at(double t) const; // OutOfDomain outside [tmin, tmax]

private:
    std::vector<double> t_;
    std::vector<Vec> x_;
};

/// CSV export: header n,t,x_0..x_{d-1},z.
void export_run_csv(const SaRun& run, std::ostream& out);

} // namespace salab
