#pragma once

#include <iosfwd>
#include <vector>

#include "salab/markov.hpp"
#include "salab/sa.hpp"

namespace salab {

/// Axis-aligned uniform binning of iterate space. The default is the single
/// bin "all" (the frozen-x regime); bins_per_coord > 1 grids a configured box.
struct BinGrid {
    int dim = 0;
    int bins_per_coord = 1;
    Vec lo, hi;

    int num_bins() const;
    int bin_of(const Vec& x) const; // clamps to edge bins
};

/// Empirical pair-marginal transition counts, per x-bin. Supports merge so
/// replicas can be counted independently and combined.
class TransitionCounts {
public:
    using CountMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

    explicit TransitionCounts(int space, BinGrid grid = {});

    /// Counts every transition z[n] -> z[n+1]; when `xs` is given, the count
    /// lands in the bin of x(n).
    void ingest(const std::vector<int>& z, const std::vector<Vec>* xs = nullptr);
    /// Counts the run's full noise path (requires record_full_noise).
    void ingest_run(const SaRun& run);
    void merge(const TransitionCounts& other);

    int space() const { return space_; }
    int num_bins() const { return int(counts_.size()); }
    long long total(int bin) const { return counts_.at(bin).sum(); }
    const CountMat& counts(int bin) const { return counts_.at(bin); }

    struct Estimate {
        Kernel kernel;
        std::vector<bool> visited; // rows with at least one observed transition
        bool empty = false;        // no data and no smoothing anywhere
    };

    /// Laplace-smoothed row-normalized kernel; unvisited rows with zero
    /// smoothing become self-loops, flagged through the visited mask.
    Estimate estimate(int bin, double smoothing) const;

    /// CSV export: header bin,from,to,count; zero cells omitted.
    void export_csv(std::ostream& out) const;

private:
    int space_;
    BinGrid grid_;
    std::vector<CountMat> counts_;
};

/// Total-variation distance between a true pair law and the pair law
/// stationary(i) * estimated(i, j).
double mimic_fidelity(const Mat& true_pair_law, const Kernel& estimated,
                      const Distribution& stationary);

/// Total-variation distance between two rows of equal-size kernels.
double row_tv(const Kernel& a, const Kernel& b, int row);

/// Pair law pi(i) K(i,j) of a stationary kernel, for fidelity oracles.
Mat pair_law(const Kernel& kernel, const Distribution& stationary);

} // namespace salab
