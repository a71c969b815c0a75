#include "salab/markov.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace salab {

namespace {

constexpr double kSumTol = 1e-12;
constexpr double kParseTol = 1e-9;

void check_probability_vector(const Vec& v, double tol, const char* what) {
    if (!v.allFinite())
        throw InvalidDistribution(std::string(what) + ": non-finite entry");
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) < -1e-15)
            throw InvalidDistribution(std::string(what) + ": negative entry at " +
                                      std::to_string(i));
    }
    double sum = v.sum();
    if (std::abs(sum - 1.0) > tol)
        throw InvalidDistribution(std::string(what) + ": sum " + std::to_string(sum) +
                                  " off 1 beyond tolerance");
}

Vec sanitize_probability_vector(Vec v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (v(i) < 0.0) v(i) = 0.0;
    v /= v.sum();
    return v;
}

} // namespace

Distribution::Distribution(Vec weights) {
    if (weights.size() < 1)
        throw InvalidDistribution("Distribution: empty weight vector");
    check_probability_vector(weights, kSumTol, "Distribution");
    w_ = sanitize_probability_vector(std::move(weights));
}

Distribution Distribution::dirac(int state, int size) {
    if (state < 0 || state >= size)
        throw StateOutOfRange("Distribution::dirac: state " + std::to_string(state));
    Vec w = Vec::Zero(size);
    w(state) = 1.0;
    return Distribution(std::move(w));
}

Distribution Distribution::uniform(int size) {
    return Distribution(Vec::Constant(size, 1.0 / size));
}

Kernel::Kernel(Mat rows) {
    if (rows.rows() < 1 || rows.rows() != rows.cols())
        throw InvalidKernel("Kernel: matrix must be square and nonempty");
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        try {
            check_probability_vector(rows.row(i).transpose(), kSumTol, "Kernel row");
        } catch (const InvalidDistribution& e) {
            throw InvalidKernel(std::string(e.what()) + " (row " + std::to_string(i) + ")");
        }
        rows.row(i) = sanitize_probability_vector(rows.row(i).transpose()).transpose();
    }
    p_ = std::move(rows);
}

Kernel Kernel::identity(int size) { return Kernel(Mat::Identity(size, size)); }

Kernel Kernel::parse(std::istream& in) {
    int s = 0;
    if (!(in >> s) || s < 1)
        throw IoFailure("Kernel::parse: missing or invalid state count");
    Mat m(s, s);
    for (int i = 0; i < s; ++i) {
        double sum = 0.0;
        for (int j = 0; j < s; ++j) {
            if (!(in >> m(i, j)))
                throw IoFailure("Kernel::parse: truncated matrix at row " +
                                std::to_string(i));
            sum += m(i, j);
        }
        if (std::abs(sum - 1.0) > kParseTol)
            throw InvalidKernel("Kernel::parse: row " + std::to_string(i) +
                                " sums to " + std::to_string(sum));
        m.row(i) /= sum;
    }
    return Kernel(std::move(m));
}

void Kernel::print(std::ostream& out) const {
    out << size() << "\n";
    std::ostringstream os;
    os.precision(17);
    for (int i = 0; i < size(); ++i) {
        for (int j = 0; j < size(); ++j) os << (j ? " " : "") << p_(i, j);
        os << "\n";
    }
    out << os.str();
}

int Decomposition::class_of(int state) const {
    for (int c = 0; c < num_classes(); ++c)
        if (std::binary_search(classes[c].begin(), classes[c].end(), state)) return c;
    return -1;
}

namespace {

// Tarjan over the support graph; SCCs come out in reverse topological order.
struct SccFinder {
    const Mat& p;
    int n;
    std::vector<int> index, low, stack_pos, stack;
    int counter = 0;
    std::vector<StateSet> sccs;

    explicit SccFinder(const Mat& m)
        : p(m), n(int(m.rows())), index(n, -1), low(n, -1), stack_pos(n, -1) {}

    void dfs(int v) {
        index[v] = low[v] = counter++;
        stack_pos[v] = int(stack.size());
        stack.push_back(v);
        for (int w = 0; w < n; ++w) {
            if (p(v, w) <= 0.0) continue;
            if (index[w] == -1) {
                dfs(w);
                low[v] = std::min(low[v], low[w]);
            } else if (stack_pos[w] != -1) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            StateSet scc(stack.begin() + stack_pos[v], stack.end());
            for (int u : scc) stack_pos[u] = -1;
            stack.resize(stack.size() - scc.size());
            std::sort(scc.begin(), scc.end());
            sccs.push_back(std::move(scc));
        }
    }

    std::vector<StateSet> run() {
        for (int v = 0; v < n; ++v)
            if (index[v] == -1) dfs(v);
        return std::move(sccs);
    }
};

bool is_closed(const Mat& p, const StateSet& cls) {
    for (int i : cls)
        for (int j = 0; j < int(p.cols()); ++j)
            if (p(i, j) > 0.0 && !std::binary_search(cls.begin(), cls.end(), j))
                return false;
    return true;
}

bool is_irreducible_within(const Mat& p, const StateSet& cls) {
    // Reachability from cls[0] through edges staying inside cls, both ways.
    int m = int(cls.size());
    auto reach = [&](bool transpose) {
        std::vector<char> seen(m, 0);
        std::vector<int> todo{0};
        seen[0] = 1;
        while (!todo.empty()) {
            int a = todo.back();
            todo.pop_back();
            for (int b = 0; b < m; ++b) {
                double w = transpose ? p(cls[b], cls[a]) : p(cls[a], cls[b]);
                if (w > 0.0 && !seen[b]) {
                    seen[b] = 1;
                    todo.push_back(b);
                }
            }
        }
        return std::count(seen.begin(), seen.end(), char(1)) == m;
    };
    return reach(false) && reach(true);
}

} // namespace

Distribution stationary_distribution(const Kernel& kernel, const StateSet& cls) {
    const Mat& p = kernel.matrix();
    if (cls.empty()) throw NotIrreducible("stationary_distribution: empty class");
    for (int i : cls)
        if (i < 0 || i >= kernel.size())
            throw StateOutOfRange("stationary_distribution: state " + std::to_string(i));
    if (!is_closed(p, cls))
        throw NotClosed("stationary_distribution: class leaks mass outside");
    if (!is_irreducible_within(p, cls))
        throw NotIrreducible("stationary_distribution: class splits under reachability");

    const int m = int(cls.size());
    Mat r(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) r(a, b) = p(cls[a], cls[b]);

    // (P^T - I) pi = 0 with the last row replaced by the normalization, so
    // periodic classes are handled without power iteration.
    Mat a = r.transpose() - Mat::Identity(m, m);
    a.row(m - 1).setOnes();
    Vec b = Vec::Zero(m);
    b(m - 1) = 1.0;
    Eigen::PartialPivLU<Mat> lu(a);
    Vec pi = lu.solve(b);
    for (int it = 0; it < 3; ++it) {
        Vec resid = b - a * pi;
        pi += lu.solve(resid);
    }
    for (int i = 0; i < m; ++i)
        if (pi(i) < 0.0) pi(i) = 0.0;
    pi /= pi.sum();

    Vec full = Vec::Zero(kernel.size());
    for (int i = 0; i < m; ++i) full(cls[i]) = pi(i);
    return Distribution(std::move(full));
}

Decomposition doeblin_decompose(const Kernel& kernel) {
    const Mat& p = kernel.matrix();
    SccFinder finder(p);
    std::vector<StateSet> sccs = finder.run();

    Decomposition d;
    for (auto& scc : sccs) {
        if (is_closed(p, scc))
            d.classes.push_back(std::move(scc));
        else
            d.transient.insert(d.transient.end(), scc.begin(), scc.end());
    }
    std::sort(d.classes.begin(), d.classes.end(),
              [](const StateSet& a, const StateSet& b) { return a.front() < b.front(); });
    std::sort(d.transient.begin(), d.transient.end());
    for (const auto& cls : d.classes) {
        d.extremals.push_back(stationary_distribution(kernel, cls));
        d.gaps.push_back(spectral_gap(kernel, cls));
    }
    return d;
}

double spectral_gap(const Kernel& kernel, const StateSet& cls) {
    const Mat& p = kernel.matrix();
    if (!is_closed(p, cls)) throw NotClosed("spectral_gap: class leaks mass outside");
    if (!is_irreducible_within(p, cls))
        throw NotIrreducible("spectral_gap: class splits under reachability");
    const int m = int(cls.size());
    if (m > 64)
        throw ClassTooLarge("spectral_gap: class size " + std::to_string(m) + " > 64");
    if (m == 1) return 1.0;

    Mat r(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) r(a, b) = p(cls[a], cls[b]);

    Eigen::EigenSolver<Mat> es(r, false);
    auto ev = es.eigenvalues();
    // Drop one copy of the eigenvalue closest to 1 (SLEM convention).
    int one_idx = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        double d = std::abs(ev(i) - std::complex<double>(1.0, 0.0));
        if (d < best) {
            best = d;
            one_idx = i;
        }
    }
    double lambda2 = 0.0;
    for (int i = 0; i < m; ++i)
        if (i != one_idx) lambda2 = std::max(lambda2, std::abs(ev(i)));
    return std::clamp(1.0 - lambda2, 0.0, 1.0);
}

Distribution invariant_mixture(const Decomposition& decomp, const Vec& weights) {
    if (weights.size() != decomp.num_classes())
        throw WeightMismatch("invariant_mixture: " + std::to_string(weights.size()) +
                             " weights for " + std::to_string(decomp.num_classes()) +
                             " classes");
    check_probability_vector(weights, kParseTol, "invariant_mixture weights");
    Vec w = Vec::Zero(decomp.extremals.front().size());
    for (int c = 0; c < decomp.num_classes(); ++c)
        w += weights(c) * decomp.extremals[c].weights();
    return Distribution(std::move(w));
}

double stationary_residual(const Kernel& kernel, const Distribution& pi) {
    RowVec r = pi.weights().transpose() * kernel.matrix() - pi.weights().transpose();
    return r.cwiseAbs().sum();
}

} // namespace salab
