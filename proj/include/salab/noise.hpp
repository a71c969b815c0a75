#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "salab/markov.hpp"
#include "salab/rng.hpp"

namespace salab {

inline double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

enum class ModulationFamily { Constant, LogisticTilt, SoftmaxMix };

/// Kernel family K(x), smooth in the iterate x, with K(0) equal to the base
/// kernel by construction. Lipschitz bounds are documented per family, not
/// enforced.
class ParamKernel {
public:
    static ParamKernel constant(Kernel base);
    /// S = 2; every row is (1 - sigma(w.x), sigma(w.x)).
    static ParamKernel logistic_tilt(Vec weight);
    /// (1 - sigma(w.x)) * A + sigma(w.x) * B.
    static ParamKernel softmax_mix(Kernel a, Kernel b, Vec weight);

    ModulationFamily family() const { return family_; }
    int size() const { return base_.size(); }
    const Kernel& base() const { return base_; }
    double lipschitz_bound() const { return lipschitz_; }

    Kernel at(const Vec& x) const;
    RowVec row_at(const Vec& x, int state) const;

private:
    ParamKernel(ModulationFamily f, Kernel base) : family_(f), base_(std::move(base)) {}

    ModulationFamily family_;
    Kernel base_;
    Vec weight_;
    std::optional<Kernel> mix_a_, mix_b_;
    double lipschitz_ = 0.0;
};

enum class SummaryFamily { FirstState, LastState, HalfSplit, SumMod };

/// Label in 0..num_labels-1 computed from the first k+1 states.
int summary_label(SummaryFamily family, const std::vector<int>& first_states,
                  int space, int num_labels);

/// Non-Markovian template: after a warm-up of k steps, the label computed
/// from Z(0..k) freezes and selects the conditional kernel forever.
struct OrderKSpec {
    int k = 0;
    SummaryFamily summary = SummaryFamily::FirstState;
    int num_labels = 1;
    std::vector<ParamKernel> conditional; // one per label
    std::optional<ParamKernel> warmup;    // drives steps n < k
};

enum class StopRule { Deterministic, Geometric };
enum class MarkDistribution { Rademacher, Constant };

/// Non-Markovian template: xi(n) = sum_m alpha^{tau_m} zeta_m accumulated at
/// stopping times, quantized through per-coordinate half-open buckets into a
/// (time-varying) label that selects the conditional kernel.
struct StoppedSumSpec {
    double alpha = 0.5;
    int mark_dim = 1;
    double mark_bound = 1.0;
    MarkDistribution marks = MarkDistribution::Rademacher;
    StopRule rule = StopRule::Deterministic;
    long long period = 1; // deterministic: tau_m = m * period
    double q = 0.5;       // geometric inter-arrival success probability
    std::vector<std::vector<double>> bucket_edges; // sorted, per coordinate
    std::vector<ParamKernel> conditional;          // one per bucket label

    int num_labels() const;
    int bucket_label(const Vec& xi) const;
};

struct MarkovSpec {
    ParamKernel kernel;
};

struct NoiseSpec {
    // monostate marks a not-yet-configured spec (configs are built in stages).
    std::variant<std::monostate, MarkovSpec, OrderKSpec, StoppedSumSpec> model;
    int start_state = 0;

    int space() const;
};

/// Single-owner mutable driving process {Z(n)}. Move between threads, never
/// share; replicas parallelize via independent RNG streams.
class NoiseProcess {
public:
    explicit NoiseProcess(NoiseSpec spec);

    int state() const { return current_; }
    long long step() const { return n_; }
    int space() const { return spec_.space(); }

    /// Samples Z(n+1) from the active conditional row at (x, Z(n)), advances
    /// history, label freezing and xi accumulation, and returns the new state.
    int sample_next(const Vec& x, CounterRng& rng);

    std::optional<int> frozen_label() const { return frozen_label_; }
    /// Active label: frozen label (OrderK), current bucket (StoppedSum), -1
    /// for the plain Markov variant.
    int current_label() const;
    const Vec& xi() const { return xi_; }

private:
    const ParamKernel& active_kernel();

    NoiseSpec spec_;
    int current_ = 0;
    long long n_ = 0;
    std::vector<int> history_;            // last max(k+1, 2) states
    std::vector<int> prefix_;             // Z(0..k) for the summary
    std::optional<int> frozen_label_;
    Vec xi_;                              // StoppedSum accumulator
    long long mark_count_ = 0;
    long long next_stop_ = 0;
};

/// Analytic pair-marginal kernel of an OrderK process at frozen x: each row z
/// is the label-posterior-weighted average of the conditional rows, with the
/// posterior taken under the stationary mixture induced by the label law.
/// Each conditional kernel must have a unique closed class.
Kernel exact_mimic_kernel(const OrderKSpec& spec, const Vec& x,
                          const Distribution& label_law);

} // namespace salab
