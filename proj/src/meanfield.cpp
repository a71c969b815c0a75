#include "salab/meanfield.hpp"

#include <algorithm>
#include <cmath>

namespace salab {

namespace {

std::string lattice_key(const Vec& y) {
    std::string key;
    key.reserve(y.size() * 12);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        key += std::to_string(llround(y(i) * 1e6));
        key += ';';
    }
    return key;
}

bool same_structure(const Decomposition& a, const Decomposition& b) {
    return a.classes == b.classes && a.transient == b.transient;
}

} // namespace

AveragedField AveragedField::stationary(Drift drift, ParamKernel pk) {
    AveragedField f(Source::Stationary, std::move(drift));
    f.pk_ = std::move(pk);
    return f;
}

AveragedField AveragedField::extremal(Drift drift, ParamKernel pk, int class_index) {
    AveragedField f(Source::Extremal, std::move(drift));
    f.pk_ = std::move(pk);
    f.class_index_ = class_index;
    return f;
}

AveragedField AveragedField::fixed(Drift drift, Distribution mu) {
    AveragedField f(Source::Fixed, std::move(drift));
    f.fixed_ = std::move(mu);
    return f;
}

const Vec& AveragedField::stationary_weights(const Vec& y) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    // An x-independent kernel has one measure everywhere; keep a single entry.
    std::string key = pk_->family() == ModulationFamily::Constant ? std::string("*")
                                                                  : lattice_key(y);
    auto it = cache_->measures.find(key);
    if (it != cache_->measures.end()) return it->second;

    Kernel k = pk_->at(y);
    Decomposition d = doeblin_decompose(k);
    if (!cache_->reference) {
        if (src_ == Source::Stationary && d.num_classes() != 1)
            throw ClassStructureChanged(
                "AveragedField: stationary source needs a unique closed class, got " +
                std::to_string(d.num_classes()));
        if (class_index_ < 0 || class_index_ >= d.num_classes())
            throw ClassStructureChanged("AveragedField: class index " +
                                        std::to_string(class_index_) + " out of range");
        cache_->reference = d;
    } else if (!same_structure(d, *cache_->reference)) {
        throw ClassStructureChanged(
            "AveragedField: ergodic decomposition changed across the queried region");
    }
    Vec w = d.extremals[class_index_].weights();
    return cache_->measures.emplace(std::move(key), std::move(w)).first->second;
}

Distribution AveragedField::measure_at(const Vec& y) const {
    if (src_ == Source::Fixed) return *fixed_;
    return Distribution(stationary_weights(y));
}

Vec AveragedField::drift_at(const Vec& y) const {
    if (!y.allFinite()) throw NonFiniteInput("AveragedField::drift_at: non-finite y");
    const Vec* w;
    Vec fixed_w;
    if (src_ == Source::Fixed) {
        fixed_w = fixed_->weights();
        w = &fixed_w;
    } else {
        w = &stationary_weights(y);
    }
    Vec f = Vec::Zero(y.size());
    for (Eigen::Index z = 0; z < w->size(); ++z)
        if ((*w)(z) > 0.0) f += (*w)(z)*drift_.h(y, int(z));
    return f;
}

OdePath integrate_ode(const AveragedField& field, Vec y0, double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon > 0.0))
        throw NonFiniteInput("integrate_ode: dt and horizon must be positive");
    OdePath path;
    long long steps = llround(std::ceil(horizon / dt - 1e-12));
    path.t.reserve(steps + 1);
    path.y.reserve(steps + 1);
    double t = 0.0;
    Vec y = std::move(y0);
    path.t.push_back(t);
    path.y.push_back(y);
    for (long long i = 0; i < steps; ++i) {
        double h = std::min(dt, horizon - t);
        Vec k1 = field.drift_at(y);
        Vec k2 = field.drift_at(y + 0.5 * h * k1);
        Vec k3 = field.drift_at(y + 0.5 * h * k2);
        Vec k4 = field.drift_at(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        path.t.push_back(t);
        path.y.push_back(y);
    }
    return path;
}

std::vector<double> tracking_error(const SaRun& run, const AveragedField& field,
                                   double window, const std::vector<double>& anchors,
                                   double dt) {
    InterpolatedPath path(run);
    std::vector<double> errors;
    errors.reserve(anchors.size());
    for (double anchor : anchors) {
        if (anchor < path.tmin() || anchor + window > path.tmax())
            throw OutOfDomain("tracking_error: anchor " + std::to_string(anchor) +
                              " + window exceeds the interpolated domain");
        Vec y = path.at(anchor);
        OdePath ode = integrate_ode(field, std::move(y), window, dt);
        double sup = 0.0;
        for (std::size_t i = 0; i < ode.t.size(); ++i) {
            double t = anchor + ode.t[i];
            sup = std::max(sup, (path.at(t) - ode.y[i]).norm());
        }
        errors.push_back(sup);
    }
    return errors;
}

namespace {

constexpr double kZeroTol = 1e-8;
constexpr double kDedupTol = 1e-4;

std::optional<Vec> newton_refine(const AveragedField& field, Vec y, const Vec& lo,
                                 const Vec& hi) {
    const int d = int(y.size());
    const double fd = 1e-6;
    double margin = 1e-3 * (hi - lo).norm() + 1e-9;
    for (int it = 0; it < 80; ++it) {
        Vec f = field.drift_at(y);
        if (f.norm() < kZeroTol) {
            for (int i = 0; i < d; ++i)
                if (y(i) < lo(i) - margin || y(i) > hi(i) + margin) return std::nullopt;
            return y;
        }
        Mat jac(d, d);
        for (int j = 0; j < d; ++j) {
            Vec yp = y, ym = y;
            yp(j) += fd;
            ym(j) -= fd;
            jac.col(j) = (field.drift_at(yp) - field.drift_at(ym)) / (2.0 * fd);
        }
        Eigen::FullPivLU<Mat> lu(jac);
        if (!lu.isInvertible()) return std::nullopt;
        Vec step = lu.solve(f);
        double cap = 0.5 * (hi - lo).norm() + 1.0;
        if (step.norm() > cap) step *= cap / step.norm();
        y -= step;
        if (!y.allFinite()) return std::nullopt;
    }
    return std::nullopt;
}

void dedup_push(std::vector<Vec>& zeros, Vec z) {
    for (const Vec& u : zeros)
        if ((u - z).lpNorm<Eigen::Infinity>() < kDedupTol) return;
    zeros.push_back(std::move(z));
}

} // namespace

std::vector<Vec> find_equilibria(const AveragedField& field, const Vec& lo,
                                 const Vec& hi, int grid) {
    const int d = int(lo.size());
    if (d < 1 || d > 2)
        throw NonFiniteInput("find_equilibria: grid search supports d <= 2 only");
    if (grid < 1) throw NonFiniteInput("find_equilibria: grid must be >= 1");

    std::vector<Vec> zeros;
    auto seed_at = [&](const Vec& s) {
        if (auto z = newton_refine(field, s, lo, hi)) dedup_push(zeros, std::move(*z));
    };
    if (d == 1) {
        for (int i = 0; i <= grid; ++i) {
            Vec s(1);
            s(0) = lo(0) + (hi(0) - lo(0)) * i / grid;
            seed_at(s);
        }
    } else {
        for (int i = 0; i <= grid; ++i)
            for (int j = 0; j <= grid; ++j) {
                Vec s(2);
                s(0) = lo(0) + (hi(0) - lo(0)) * i / grid;
                s(1) = lo(1) + (hi(1) - lo(1)) * j / grid;
                seed_at(s);
            }
    }
    std::sort(zeros.begin(), zeros.end(), [](const Vec& a, const Vec& b) {
        for (Eigen::Index i = 0; i < a.size(); ++i)
            if (a(i) != b(i)) return a(i) < b(i);
        return false;
    });
    return zeros;
}

std::vector<Vec> refine_equilibria(const AveragedField& field,
                                   const std::vector<Vec>& seeds) {
    std::vector<Vec> zeros;
    for (const Vec& s : seeds) {
        Vec lo = s.array() - 1e6;
        Vec hi = s.array() + 1e6;
        if (auto z = newton_refine(field, s, lo, hi)) dedup_push(zeros, std::move(*z));
    }
    return zeros;
}

} // namespace salab
