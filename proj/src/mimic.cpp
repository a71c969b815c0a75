#include "salab/mimic.hpp"

#include <cmath>
#include <ostream>

namespace salab {

int BinGrid::num_bins() const {
    if (dim <= 0 || bins_per_coord <= 1) return 1;
    int n = 1;
    for (int c = 0; c < dim; ++c) n *= bins_per_coord;
    return n;
}

int BinGrid::bin_of(const Vec& x) const {
    if (dim <= 0 || bins_per_coord <= 1) return 0;
    int bin = 0;
    int stride = 1;
    for (int c = 0; c < dim; ++c) {
        double span = hi(c) - lo(c);
        int idx = span > 0.0
                      ? int(std::floor((x(c) - lo(c)) / span * bins_per_coord))
                      : 0;
        idx = std::clamp(idx, 0, bins_per_coord - 1);
        bin += idx * stride;
        stride *= bins_per_coord;
    }
    return bin;
}

TransitionCounts::TransitionCounts(int space, BinGrid grid)
    : space_(space), grid_(std::move(grid)) {
    if (space_ < 1) throw StateOutOfRange("TransitionCounts: empty state space");
    counts_.assign(grid_.num_bins(), CountMat::Zero(space_, space_));
}

void TransitionCounts::ingest(const std::vector<int>& z, const std::vector<Vec>* xs) {
    if (xs && xs->size() + 1 < z.size())
        throw StateOutOfRange("TransitionCounts::ingest: x sequence shorter than steps");
    for (std::size_t n = 0; n + 1 < z.size(); ++n) {
        int from = z[n], to = z[n + 1];
        if (from < 0 || from >= space_ || to < 0 || to >= space_)
            throw StateOutOfRange("TransitionCounts::ingest: state outside 0.." +
                                  std::to_string(space_ - 1));
        int bin = xs ? grid_.bin_of((*xs)[n]) : 0;
        ++counts_[bin](from, to);
    }
}

void TransitionCounts::ingest_run(const SaRun& run) {
    if (run.z_full.empty())
        throw StateOutOfRange("TransitionCounts::ingest_run: run has no full noise path");
    if (num_bins() > 1)
        throw StateOutOfRange(
            "TransitionCounts::ingest_run: binned ingestion needs explicit x samples");
    ingest(run.z_full);
}

void TransitionCounts::merge(const TransitionCounts& other) {
    if (other.space_ != space_ || other.num_bins() != num_bins())
        throw WeightMismatch("TransitionCounts::merge: shape mismatch");
    for (int b = 0; b < num_bins(); ++b) counts_[b] += other.counts_[b];
}

TransitionCounts::Estimate TransitionCounts::estimate(int bin, double smoothing) const {
    const CountMat& c = counts_.at(bin);
    Estimate est{Kernel::identity(space_), std::vector<bool>(space_, false), false};
    Mat m(space_, space_);
    bool any = false;
    for (int z = 0; z < space_; ++z) {
        long long row_total = 0;
        for (int j = 0; j < space_; ++j) row_total += c(z, j);
        est.visited[z] = row_total > 0;
        any = any || est.visited[z];
        double den = double(row_total) + space_ * smoothing;
        if (den > 0.0) {
            for (int j = 0; j < space_; ++j) m(z, j) = (double(c(z, j)) + smoothing) / den;
        } else {
            m.row(z).setZero();
            m(z, z) = 1.0; // unvisited row defaults to a self-loop
        }
    }
    est.empty = !any && smoothing <= 0.0;
    est.kernel = Kernel(std::move(m));
    return est;
}

void TransitionCounts::export_csv(std::ostream& out) const {
    out << "bin,from,to,count\n";
    for (int b = 0; b < num_bins(); ++b)
        for (int i = 0; i < space_; ++i)
            for (int j = 0; j < space_; ++j)
                if (counts_[b](i, j) != 0)
                    out << b << ',' << i << ',' << j << ',' << counts_[b](i, j) << '\n';
}

Mat pair_law(const Kernel& kernel, const Distribution& stationary) {
    Mat m(kernel.size(), kernel.size());
    for (int i = 0; i < kernel.size(); ++i)
        m.row(i) = stationary(i) * kernel.row(i);
    return m;
}

double mimic_fidelity(const Mat& true_pair_law, const Kernel& estimated,
                      const Distribution& stationary) {
    Mat est = pair_law(estimated, stationary);
    return 0.5 * (true_pair_law - est).cwiseAbs().sum();
}

double row_tv(const Kernel& a, const Kernel& b, int row) {
    return 0.5 * (a.row(row) - b.row(row)).cwiseAbs().sum();
}

} // namespace salab
