#include "salab/noise.hpp"

#include <algorithm>
#include <cmath>

namespace salab {

ParamKernel ParamKernel::constant(Kernel base) {
    ParamKernel pk(ModulationFamily::Constant, std::move(base));
    pk.lipschitz_ = 0.0;
    return pk;
}

ParamKernel ParamKernel::logistic_tilt(Vec weight) {
    Mat half = Mat::Constant(2, 2, 0.5);
    ParamKernel pk(ModulationFamily::LogisticTilt, Kernel(half));
    // Per-row L1 change is 2 |sigma(w.x) - sigma(w.x')| <= |w| |x - x'| / 2.
    pk.lipschitz_ = weight.norm() / 2.0;
    pk.weight_ = std::move(weight);
    return pk;
}

ParamKernel ParamKernel::softmax_mix(Kernel a, Kernel b, Vec weight) {
    if (a.size() != b.size())
        throw InvalidKernel("softmax_mix: endpoint kernels differ in size");
    Mat base = 0.5 * a.matrix() + 0.5 * b.matrix();
    ParamKernel pk(ModulationFamily::SoftmaxMix, Kernel(std::move(base)));
    double spread = (a.matrix() - b.matrix()).cwiseAbs().rowwise().sum().maxCoeff();
    pk.lipschitz_ = weight.norm() / 4.0 * spread;
    pk.weight_ = std::move(weight);
    pk.mix_a_ = std::move(a);
    pk.mix_b_ = std::move(b);
    return pk;
}

Kernel ParamKernel::at(const Vec& x) const {
    if (!x.allFinite()) throw NonFiniteInput("ParamKernel::at: non-finite x");
    switch (family_) {
        case ModulationFamily::Constant:
            return base_;
        case ModulationFamily::LogisticTilt: {
            double s = logistic(weight_.dot(x));
            Mat m(2, 2);
            m << 1.0 - s, s, 1.0 - s, s;
            return Kernel(std::move(m));
        }
        case ModulationFamily::SoftmaxMix: {
            double s = logistic(weight_.dot(x));
            return Kernel((1.0 - s) * mix_a_->matrix() + s * mix_b_->matrix());
        }
    }
    throw Error("ParamKernel::at: unreachable");
}

RowVec ParamKernel::row_at(const Vec& x, int state) const {
    if (!x.allFinite()) throw NonFiniteInput("ParamKernel::row_at: non-finite x");
    switch (family_) {
        case ModulationFamily::Constant:
            return base_.row(state);
        case ModulationFamily::LogisticTilt: {
            double s = logistic(weight_.dot(x));
            RowVec r(2);
            r << 1.0 - s, s;
            return r;
        }
        case ModulationFamily::SoftmaxMix: {
            double s = logistic(weight_.dot(x));
            return (1.0 - s) * mix_a_->row(state) + s * mix_b_->row(state);
        }
    }
    throw Error("ParamKernel::row_at: unreachable");
}

int summary_label(SummaryFamily family, const std::vector<int>& first_states,
                  int space, int num_labels) {
    if (first_states.empty())
        throw UnresolvableLabel("summary_label: empty state prefix");
    int label = 0;
    switch (family) {
        case SummaryFamily::FirstState:
            label = first_states.front();
            break;
        case SummaryFamily::LastState:
            label = first_states.back();
            break;
        case SummaryFamily::HalfSplit:
            label = first_states.front() < (space + 1) / 2 ? 0 : 1;
            break;
        case SummaryFamily::SumMod: {
            long long s = 0;
            for (int z : first_states) s += z;
            label = int(s % num_labels);
            break;
        }
    }
    if (label < 0 || label >= num_labels)
        throw UnresolvableLabel("summary_label: label " + std::to_string(label) +
                                " outside 0.." + std::to_string(num_labels - 1));
    return label;
}

int StoppedSumSpec::num_labels() const {
    int n = 1;
    for (const auto& edges : bucket_edges) n *= int(edges.size()) + 1;
    return n;
}

int StoppedSumSpec::bucket_label(const Vec& xi) const {
    int label = 0;
    int stride = 1;
    for (int c = 0; c < mark_dim; ++c) {
        const auto& edges = bucket_edges[c];
        int idx = int(std::upper_bound(edges.begin(), edges.end(), xi(c)) - edges.begin());
        label += idx * stride;
        stride *= int(edges.size()) + 1;
    }
    return label;
}

int NoiseSpec::space() const {
    return std::visit(
        [](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, std::monostate>)
                throw UnresolvableLabel("NoiseSpec: no noise model configured");
            else if constexpr (std::is_same_v<T, MarkovSpec>)
                return m.kernel.size();
            else
                return m.conditional.front().size();
        },
        model);
}

NoiseProcess::NoiseProcess(NoiseSpec spec) : spec_(std::move(spec)) {
    if (const auto* ok = std::get_if<OrderKSpec>(&spec_.model)) {
        if (ok->num_labels < 1 || int(ok->conditional.size()) != ok->num_labels)
            throw UnresolvableLabel("NoiseProcess: conditional kernel count != labels");
        if (ok->k > 0 && !ok->warmup)
            throw UnresolvableLabel("NoiseProcess: k > 0 requires a warm-up kernel");
    }
    if (const auto* ss = std::get_if<StoppedSumSpec>(&spec_.model)) {
        if (int(ss->bucket_edges.size()) != ss->mark_dim)
            throw WeightMismatch("NoiseProcess: bucket edges per coordinate mismatch");
        if (int(ss->conditional.size()) != ss->num_labels())
            throw WeightMismatch("NoiseProcess: conditional kernel count != buckets");
        if (!(ss->alpha > 0.0 && ss->alpha < 1.0))
            throw NonFiniteInput("NoiseProcess: alpha outside (0,1)");
        if (ss->rule == StopRule::Deterministic && ss->period < 1)
            throw NonFiniteInput("NoiseProcess: stopping period must be >= 1");
        xi_ = Vec::Zero(ss->mark_dim);
    }
    if (spec_.start_state < 0 || spec_.start_state >= spec_.space())
        throw StateOutOfRange("NoiseProcess: start state out of range");
    current_ = spec_.start_state;
    history_.push_back(current_);
    prefix_.push_back(current_);
}

const ParamKernel& NoiseProcess::active_kernel() {
    if (const auto* mk = std::get_if<MarkovSpec>(&spec_.model)) return mk->kernel;
    if (const auto* ok = std::get_if<OrderKSpec>(&spec_.model)) {
        if (n_ < ok->k) return *ok->warmup;
        if (!frozen_label_)
            frozen_label_ = summary_label(ok->summary, prefix_, space(),
                                          ok->num_labels);
        return ok->conditional[*frozen_label_];
    }
    const auto& ss = std::get<StoppedSumSpec>(spec_.model);
    return ss.conditional[ss.bucket_label(xi_)];
}

int NoiseProcess::current_label() const {
    if (const auto* ok = std::get_if<OrderKSpec>(&spec_.model)) {
        (void)ok;
        return frozen_label_ ? *frozen_label_ : -1;
    }
    if (const auto* ss = std::get_if<StoppedSumSpec>(&spec_.model))
        return ss->bucket_label(xi_);
    return -1;
}

int NoiseProcess::sample_next(const Vec& x, CounterRng& rng) {
    if (auto* ss = std::get_if<StoppedSumSpec>(&spec_.model)) {
        while (next_stop_ == n_) {
            Vec zeta(ss->mark_dim);
            for (int c = 0; c < ss->mark_dim; ++c)
                zeta(c) = ss->marks == MarkDistribution::Rademacher
                              ? ss->mark_bound * rng.rademacher()
                              : ss->mark_bound;
            xi_ += std::pow(ss->alpha, double(next_stop_)) * zeta;
            ++mark_count_;
            if (ss->rule == StopRule::Deterministic)
                next_stop_ = mark_count_ * ss->period;
            else
                next_stop_ += 1 + rng.geometric(ss->q);
        }
    }
    RowVec row = active_kernel().row_at(x, current_);
    int next = rng.categorical(row, space());
    ++n_;
    current_ = next;
    std::size_t cap = 2;
    if (const auto* ok = std::get_if<OrderKSpec>(&spec_.model)) {
        cap = std::max<std::size_t>(ok->k + 1, 2);
        if (int(prefix_.size()) <= ok->k) prefix_.push_back(next);
    }
    history_.push_back(next);
    if (history_.size() > cap) history_.erase(history_.begin());
    return next;
}

Kernel exact_mimic_kernel(const OrderKSpec& spec, const Vec& x,
                          const Distribution& label_law) {
    if (label_law.size() != spec.num_labels)
        throw UnresolvableLabel("exact_mimic_kernel: label law length " +
                                std::to_string(label_law.size()) + " != " +
                                std::to_string(spec.num_labels));
    const int s = spec.conditional.front().size();
    std::vector<Kernel> kernels;
    std::vector<Vec> stationaries;
    std::vector<double> weights;
    for (int l = 0; l < spec.num_labels; ++l) {
        if (label_law(l) <= 0.0) continue;
        Kernel k = spec.conditional[l].at(x);
        Decomposition d = doeblin_decompose(k);
        if (d.num_classes() != 1)
            throw UnresolvableLabel(
                "exact_mimic_kernel: conditional kernel for label " +
                std::to_string(l) + " has " + std::to_string(d.num_classes()) +
                " closed classes");
        stationaries.push_back(d.extremals[0].weights());
        kernels.push_back(std::move(k));
        weights.push_back(label_law(l));
    }
    Mat mimic(s, s);
    for (int z = 0; z < s; ++z) {
        RowVec num = RowVec::Zero(s);
        double den = 0.0;
        for (std::size_t i = 0; i < kernels.size(); ++i) {
            double w = weights[i] * stationaries[i](z);
            num += w * kernels[i].row(z);
            den += w;
        }
        if (den > 0.0) {
            mimic.row(z) = num / den;
        } else {
            // State unseen under every label: fall back to the prior mixture.
            RowVec prior = RowVec::Zero(s);
            for (std::size_t i = 0; i < kernels.size(); ++i)
                prior += weights[i] * kernels[i].row(z);
            mimic.row(z) = prior;
        }
    }
    return Kernel(std::move(mimic));
}

} // namespace salab
