#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "salab/markov.hpp"
#include "salab/rng.hpp"

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

// Independent decomposition oracle: transitive closure of the support graph,
// communicating classes by mutual reachability, closed iff no out-edge leaves.
struct OracleDecomp {
    std::vector<StateSet> classes;
    StateSet transient;
};

OracleDecomp brute_force_decompose(const Kernel& k) {
    const int s = k.size();
    std::vector<std::vector<bool>> reach(s, std::vector<bool>(s, false));
    for (int i = 0; i < s; ++i) {
        reach[i][i] = true;
        for (int j = 0; j < s; ++j)
            if (k(i, j) > 0.0) reach[i][j] = true;
    }
    for (int m = 0; m < s; ++m)
        for (int i = 0; i < s; ++i)
            if (reach[i][m])
                for (int j = 0; j < s; ++j)
                    if (reach[m][j]) reach[i][j] = true;

    std::vector<int> comp(s, -1);
    OracleDecomp out;
    for (int i = 0; i < s; ++i) {
        if (comp[i] >= 0) continue;
        StateSet cls;
        for (int j = 0; j < s; ++j)
            if (reach[i][j] && reach[j][i]) cls.push_back(j);
        bool closed = true;
        for (int a : cls)
            for (int j = 0; j < s; ++j)
                if (k(a, j) > 0.0 &&
                    std::find(cls.begin(), cls.end(), j) == cls.end())
                    closed = false;
        for (int a : cls) comp[a] = closed ? 1 : 0;
        if (closed)
            out.classes.push_back(cls);
        else
            out.transient.insert(out.transient.end(), cls.begin(), cls.end());
    }
    std::sort(out.classes.begin(), out.classes.end(),
              [](const StateSet& a, const StateSet& b) { return a.front() < b.front(); });
    std::sort(out.transient.begin(), out.transient.end());
    return out;
}

Kernel random_sparse_kernel(int s, CounterRng& rng) {
    Mat m = Mat::Zero(s, s);
    for (int i = 0; i < s; ++i) {
        int fanout = 1 + int(rng.uniform01() * 3);
        for (int e = 0; e < fanout; ++e) {
            int j = int(rng.uniform01() * s);
            m(i, j) += 0.1 + rng.uniform01();
        }
        m.row(i) /= m.row(i).sum();
    }
    return Kernel(std::move(m));
}

} // namespace

TEST_CASE("stationary distribution on closed classes") {
    Kernel cycle = make_kernel({{0.0, 1.0}, {1.0, 0.0}});
    Distribution pi = stationary_distribution(cycle, {0, 1});
    CHECK(pi(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pi(1) == doctest::Approx(0.5).epsilon(1e-12));

    Kernel lazy = make_kernel({{0.9, 0.1}, {0.5, 0.5}});
    Distribution pi2 = stationary_distribution(lazy, {0, 1});
    CHECK(pi2(0) == doctest::Approx(5.0 / 6.0).epsilon(1e-10));
    CHECK(pi2(1) == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
    CHECK(stationary_residual(lazy, pi2) <= 1e-12);

    // Power-iteration oracle for the aperiodic case.
    RowVec p = RowVec::Constant(2, 0.5);
    for (int it = 0; it < 10000; ++it) p = p * lazy.matrix();
    CHECK(std::abs(p(0) - pi2(0)) <= 1e-8);
    CHECK(std::abs(p(1) - pi2(1)) <= 1e-8);

    Kernel absorbing = make_kernel({{1.0}});
    Distribution pi3 = stationary_distribution(absorbing, {0});
    CHECK(pi3(0) == 1.0);
}

TEST_CASE("stationary distribution rejects bad classes") {
    Kernel open = make_kernel({{0.5, 0.5}, {0.5, 0.5}});
    CHECK_THROWS_AS(stationary_distribution(open, {0}), NotClosed);
    Kernel split = make_kernel({{1.0, 0.0}, {0.0, 1.0}});
    CHECK_THROWS_AS(stationary_distribution(split, {0, 1}), NotIrreducible);
}

TEST_CASE("doeblin decomposition on canonical shapes") {
    Kernel blocks = make_kernel({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}});
    Decomposition d = doeblin_decompose(blocks);
    REQUIRE(d.num_classes() == 2);
    CHECK(d.classes[0] == StateSet{0, 1});
    CHECK(d.classes[1] == StateSet{2, 3});
    CHECK(d.transient.empty());

    Kernel feeder = make_kernel({{1, 0, 0}, {0, 1, 0}, {0.5, 0.3, 0.2}});
    Decomposition d2 = doeblin_decompose(feeder);
    REQUIRE(d2.num_classes() == 2);
    CHECK(d2.classes[0] == StateSet{0});
    CHECK(d2.classes[1] == StateSet{1});
    CHECK(d2.transient == StateSet{2});
    CHECK(d2.class_of(2) == -1);
    CHECK(d2.class_of(1) == 1);

    Kernel irreducible = make_kernel({{0.9, 0.1}, {0.5, 0.5}});
    Decomposition d3 = doeblin_decompose(irreducible);
    CHECK(d3.num_classes() == 1);
    CHECK(d3.classes[0] == StateSet{0, 1});
    CHECK(d3.transient.empty());
}

TEST_CASE("decomposition agrees with the brute-force oracle") {
    CounterRng rng(42, 0);
    for (int trial = 0; trial < 60; ++trial) {
        int s = 2 + int(rng.uniform01() * 11);
        Kernel k = random_sparse_kernel(s, rng);
        Decomposition d = doeblin_decompose(k);
        OracleDecomp o = brute_force_decompose(k);
        REQUIRE(d.classes == o.classes);
        REQUIRE(d.transient == o.transient);
        for (int c = 0; c < d.num_classes(); ++c) {
            CHECK(stationary_residual(k, d.extremals[c]) <= 1e-12);
            // Zero mass off the class.
            double off = d.extremals[c].weights().sum();
            for (int z : d.classes[c]) off -= d.extremals[c](z);
            CHECK(std::abs(off) <= 1e-12);
        }
    }
}

TEST_CASE("spectral gap values") {
    Kernel cycle = make_kernel({{0.0, 1.0}, {1.0, 0.0}});
    CHECK(spectral_gap(cycle, {0, 1}) == doctest::Approx(0.0).epsilon(1e-9));

    Kernel rank_one = make_kernel({{0.3, 0.7}, {0.3, 0.7}});
    CHECK(spectral_gap(rank_one, {0, 1}) == doctest::Approx(1.0).epsilon(1e-9));

    // 2x2 trace identity: lambda_2 = trace - 1 = 0.4.
    Kernel lazy = make_kernel({{0.9, 0.1}, {0.5, 0.5}});
    CHECK(spectral_gap(lazy, {0, 1}) == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("spectral gap is invariant under state relabeling") {
    CounterRng rng(7, 0);
    for (int trial = 0; trial < 10; ++trial) {
        int s = 3 + int(rng.uniform01() * 5);
        Mat m(s, s);
        for (int i = 0; i < s; ++i) {
            for (int j = 0; j < s; ++j) m(i, j) = 0.05 + rng.uniform01();
            m.row(i) /= m.row(i).sum();
        }
        Kernel k(m);
        std::vector<int> perm(s);
        for (int i = 0; i < s; ++i) perm[i] = i;
        for (int i = s - 1; i > 0; --i)
            std::swap(perm[i], perm[int(rng.uniform01() * (i + 1))]);
        Mat pm(s, s);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) pm(perm[i], perm[j]) = m(i, j);
        StateSet all(s);
        for (int i = 0; i < s; ++i) all[i] = i;
        CHECK(std::abs(spectral_gap(k, all) - spectral_gap(Kernel(pm), all)) <= 1e-9);
    }
}

TEST_CASE("invariant mixtures") {
    Kernel blocks = make_kernel({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}});
    Decomposition d = doeblin_decompose(blocks);

    Vec w(2);
    w << 1.0, 0.0;
    Distribution v = invariant_mixture(d, w);
    CHECK((v.weights() - d.extremals[0].weights()).lpNorm<Eigen::Infinity>() <= 1e-15);

    w << 0.5, 0.5;
    Distribution half = invariant_mixture(d, w);
    for (int z = 0; z < 4; ++z) CHECK(half(z) == doctest::Approx(0.25).epsilon(1e-12));

    Kernel lazy = make_kernel({{0.9, 0.1}, {0.5, 0.5}});
    Decomposition d1 = doeblin_decompose(lazy);
    Vec one(1);
    one << 1.0;
    Distribution u = invariant_mixture(d1, one);
    CHECK(stationary_residual(lazy, u) <= 1e-12);

    Vec bad(3);
    bad << 0.2, 0.3, 0.5;
    CHECK_THROWS_AS(invariant_mixture(d, bad), WeightMismatch);

    // Stationarity over random mixture weights.
    CounterRng rng(5, 0);
    for (int trial = 0; trial < 50; ++trial) {
        Vec rw(2);
        rw << rng.uniform01() + 1e-3, rng.uniform01() + 1e-3;
        rw /= rw.sum();
        CHECK(stationary_residual(blocks, invariant_mixture(d, rw)) <= 1e-12);
    }
}

TEST_CASE("kernel text format round-trips and rejects bad rows") {
    Kernel k = make_kernel({{0.25, 0.75}, {0.6, 0.4}});
    std::stringstream ss;
    k.print(ss);
    Kernel back = Kernel::parse(ss);
    CHECK((k.matrix() - back.matrix()).lpNorm<Eigen::Infinity>() <= 1e-15);

    std::stringstream bad("2\n0.5 0.6\n0.5 0.5\n");
    CHECK_THROWS_AS(Kernel::parse(bad), InvalidKernel);

    // Row off by less than 1e-9 is accepted and renormalized.
    std::stringstream near("2\n0.5 0.5000000001\n0.5 0.5\n");
    Kernel kn = Kernel::parse(near);
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(kn.row(i).sum() - 1.0) <= 1e-12);
}

TEST_CASE("constructors reject invalid kernels and distributions") {
    Mat neg(2, 2);
    neg << 1.1, -0.1, 0.5, 0.5;
    CHECK_THROWS_AS(Kernel{neg}, InvalidKernel);
    Mat off(2, 2);
    off << 0.6, 0.6, 0.5, 0.5;
    CHECK_THROWS_AS(Kernel{off}, InvalidKernel);
    Vec w(2);
    w << 0.7, 0.7;
    CHECK_THROWS_AS(Distribution{w}, InvalidDistribution);
}
