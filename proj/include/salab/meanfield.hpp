#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "salab/noise.hpp"
#include "salab/sa.hpp"

namespace salab {

/// Averaged drift F(y) = sum_z h(y, z) mu_y(z), with the measure taken from
/// the stationary law of a kernel family at y, from a fixed extremal class of
/// that family, or from a fixed distribution. Kernel-backed sources require
/// the class structure of kernel_at(y) to match the structure at the first
/// query point; a change raises ClassStructureChanged.
class AveragedField {
public:
    static AveragedField stationary(Drift drift, ParamKernel pk);
    static AveragedField extremal(Drift drift, ParamKernel pk, int class_index);
    static AveragedField fixed(Drift drift, Distribution mu);

    Vec drift_at(const Vec& y) const;
    Distribution measure_at(const Vec& y) const;
    const Drift& drift() const { return drift_; }

private:
    enum class Source { Stationary, Extremal, Fixed };

    AveragedField(Source src, Drift drift) : src_(src), drift_(std::move(drift)) {}

    const Vec& stationary_weights(const Vec& y) const;

    Source src_;
    Drift drift_;
    std::optional<ParamKernel> pk_;
    int class_index_ = 0;
    std::optional<Distribution> fixed_;

    struct Cache {
        std::mutex mu;
        std::optional<Decomposition> reference;
        std::unordered_map<std::string, Vec> measures; // keyed by 1e-6 lattice
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

struct OdePath {
    std::vector<double> t;
    std::vector<Vec> y;
};

/// Classical fourth-order one-step integration of dy/dt = F(y).
OdePath integrate_ode(const AveragedField& field, Vec y0, double horizon, double dt);

/// Windowed sup-errors e_i = sup_{t in [T_i, T_i + W]} |xbar(t) - y^{T_i}(t)|
/// with y^{T_i} the ODE solution restarted from xbar(T_i).
std::vector<double> tracking_error(const SaRun& run, const AveragedField& field,
                                   double window, const std::vector<double>& anchors,
                                   double dt);

/// Approximate zeros of the averaged drift inside [lo, hi], grid-seeded
/// Newton refinement to |F| < 1e-8, deduplicated within 1e-4. d <= 2.
std::vector<Vec> find_equilibria(const AveragedField& field, const Vec& lo,
                                 const Vec& hi, int grid);

/// Newton refinement from caller-supplied seeds, for d > 2.
std::vector<Vec> refine_equilibria(const AveragedField& field,
                                   const std::vector<Vec>& seeds);

} // namespace salab
