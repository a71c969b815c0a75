#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "salab/errors.hpp"

namespace salab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

/// States of a finite noise space are identified with indices 0..S-1.
using StateSet = std::vector<int>; // kept sorted ascending

/// Probability vector over the state space. Entries >= 0, sum 1 within 1e-12
/// at construction; stored exactly renormalized.
class Distribution {
public:
    explicit Distribution(Vec weights);
    static Distribution dirac(int state, int size);
    static Distribution uniform(int size);

    int size() const { return static_cast<int>(w_.size()); }
    double operator()(int i) const { return w_(i); }
    const Vec& weights() const { return w_; }

private:
    Vec w_;
};

/// Row-stochastic matrix on a finite state space. Rows sum to 1 within 1e-12
/// at construction and are stored exactly renormalized.
class Kernel {
public:
    explicit Kernel(Mat rows);

    int size() const { return static_cast<int>(p_.rows()); }
    double operator()(int i, int j) const { return p_(i, j); }
    const Mat& matrix() const { return p_; }
    RowVec row(int i) const { return p_.row(i); }

    static Kernel identity(int size);

    /// Plain-text format: first line S, then S lines of S decimal numbers.
    /// Rows off by more than 1e-9 from sum 1 are rejected; accepted rows are
    /// renormalized exactly.
    static Kernel parse(std::istream& in);
    void print(std::ostream& out) const;

private:
    Mat p_;
};

/// Closed recurrent classes, transient remainder, one extremal stationary
/// measure and one spectral gap per class. Classes are ordered by their
/// smallest member.
struct Decomposition {
    std::vector<StateSet> classes;
    StateSet transient;
    std::vector<Distribution> extremals; // full-length, zero mass off class
    std::vector<double> gaps;            // 1 - |lambda_2| per class

    int num_classes() const { return static_cast<int>(classes.size()); }
    /// Index of the class containing `state`, or -1 if transient.
    int class_of(int state) const;
};

/// Unique stationary distribution of `kernel` restricted to a closed
/// irreducible class, embedded as a full-length vector with zero mass off the
/// class. Residual ||pi P - pi||_1 <= 1e-12.
Distribution stationary_distribution(const Kernel& kernel, const StateSet& cls);

/// Doeblin decomposition of the support graph (edge i->j iff P(i,j) > 0).
Decomposition doeblin_decompose(const Kernel& kernel);

/// 1 - |lambda_2| of the kernel restricted to a closed irreducible class,
/// where |lambda_2| is the max modulus over the spectrum excluding one copy
/// of eigenvalue 1. Class size is capped at 64.
double spectral_gap(const Kernel& kernel, const StateSet& cls);

/// Convex combination of the decomposition's extremal measures.
Distribution invariant_mixture(const Decomposition& decomp, const Vec& weights);

/// ||pi P - pi||_1, for stationarity checks.
double stationary_residual(const Kernel& kernel, const Distribution& pi);

} // namespace salab
