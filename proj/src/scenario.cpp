#include "salab/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "salab/csv.hpp"
#include "salab/grad.hpp"
#include "salab/meanfield.hpp"
#include "salab/mimic.hpp"

namespace salab {

namespace fs = std::filesystem;
using nlohmann::json;

bool ScenarioResult::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const Check& c) { return c.pass; });
}

namespace {

constexpr std::uint64_t kVariantStride = 1000000;
constexpr std::uint64_t kRerunOffset = 500000;

const MarkovSpec* as_markov(const NoiseSpec& s) { return std::get_if<MarkovSpec>(&s.model); }
const OrderKSpec* as_orderk(const NoiseSpec& s) { return std::get_if<OrderKSpec>(&s.model); }

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw IoFailure("cannot open " + p.string() + " for writing");
    return f;
}

/// Kernel whose Doeblin decomposition carries the variant's class structure.
std::optional<Kernel> reference_kernel(const VariantConfig& vc, int dim) {
    Vec zero = Vec::Zero(dim);
    if (const auto* mk = as_markov(vc.noise)) return mk->kernel.at(zero);
    if (const auto* ok = as_orderk(vc.noise))
        return exact_mimic_kernel(*ok, zero, Distribution::uniform(ok->num_labels));
    return std::nullopt;
}

/// Closed class holding the last 10% of recorded noise states, or -1.
int tail_class(const Decomposition& d, const SaRun& run) {
    if (run.samples.empty()) return -1;
    std::size_t from = run.samples.size() - std::max<std::size_t>(1, run.samples.size() / 10);
    int cls = -2;
    for (std::size_t i = from; i < run.samples.size(); ++i) {
        int c = d.class_of(run.samples[i].z);
        if (cls == -2)
            cls = c;
        else if (cls != c)
            return -1;
    }
    return cls >= 0 ? cls : -1;
}

/// Stationary mean of the state values on the extremal of the class that
/// contains `anchor_state`.
double class_mean(const Kernel& k, const Vec& values, int anchor_state) {
    Decomposition d = doeblin_decompose(k);
    int c = d.class_of(anchor_state);
    if (c < 0) c = 0;
    return d.extremals[c].weights().dot(values);
}

AveragedField variant_field(const ExperimentConfig& cfg, const VariantConfig& vc) {
    if (const auto* mk = as_markov(vc.noise))
        return AveragedField::stationary(cfg.drift, mk->kernel);
    if (const auto* ok = as_orderk(vc.noise)) {
        Kernel mimic = exact_mimic_kernel(*ok, Vec::Zero(cfg.dim),
                                          Distribution::uniform(ok->num_labels));
        int label = vc.expected_label >= 0 ? vc.expected_label : 0;
        Kernel cond = ok->conditional[label].at(Vec::Zero(cfg.dim));
        Decomposition cond_d = doeblin_decompose(cond);
        int anchor = cond_d.classes.front().front();
        Decomposition mimic_d = doeblin_decompose(mimic);
        int cls = mimic_d.class_of(anchor);
        if (cls < 0) cls = 0;
        return AveragedField::extremal(cfg.drift, ParamKernel::constant(std::move(mimic)),
                                       cls);
    }
    throw UnresolvableLabel(
        "variant \"" + vc.name + "\": no mean-field construction for stopped-sum noise");
}

struct PassContext {
    const ExperimentConfig& cfg;
    ScenarioResult& result;
    bool write_files;
    fs::path out;
};

void pass_class_memory(PassContext& ctx, const ClassMemoryPass& p) {
    const auto& cfg = ctx.cfg;
    if (cfg.variants.size() < 2) {
        ctx.result.checks.push_back(
            {"class-memory", false, "needs at least two variants"});
        return;
    }
    std::vector<double> means;
    std::vector<int> expected_class;
    std::optional<Decomposition> mimic_d;
    for (const auto& vc : cfg.variants) {
        const auto* ok = as_orderk(vc.noise);
        if (!ok || vc.expected_label < 0) {
            ctx.result.checks.push_back(
                {"class-memory", false,
                 "variant \"" + vc.name + "\" is not OrderK with an expected label"});
            return;
        }
        Kernel cond = ok->conditional[vc.expected_label].at(Vec::Zero(cfg.dim));
        Decomposition cond_d = doeblin_decompose(cond);
        means.push_back(cond_d.extremals[0].weights().dot(cfg.state_values));
        if (!mimic_d) {
            Kernel mimic = exact_mimic_kernel(*ok, Vec::Zero(cfg.dim),
                                              Distribution::uniform(ok->num_labels));
            mimic_d = doeblin_decompose(mimic);
        }
        expected_class.push_back(mimic_d->class_of(cond_d.classes.front().front()));
    }
    int total = 0, good = 0;
    for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
        for (const auto& run : ctx.result.runs[v]) {
            ++total;
            double x = run.final_x(0);
            bool own = std::abs(x - means[v]) <= p.own_tol;
            bool others = true;
            for (std::size_t u = 0; u < means.size(); ++u)
                if (u != v && std::abs(x - means[u]) < p.other_min) others = false;
            bool tail = tail_class(*mimic_d, run) == expected_class[v];
            if (own && others && tail) ++good;
        }
    }
    std::ostringstream detail;
    detail << good << "/" << total << " replicas within " << p.own_tol
           << " of their own class mean, at least " << p.other_min
           << " from every other, with matching tail class";
    ctx.result.checks.push_back({"class-memory", good == total && total > 0, detail.str()});
}

const OrderKSpec& require_orderk(const ExperimentConfig& cfg, const char* pass) {
    const auto* ok = as_orderk(cfg.variants.at(0).noise);
    if (!ok)
        throw UnresolvableLabel(std::string(pass) +
                                ": variant 0 must use OrderK noise");
    return *ok;
}

void pass_mimic_estimate(PassContext& ctx, const MimicEstimatePass& p) {
    const auto& cfg = ctx.cfg;
    const OrderKSpec& ok = require_orderk(cfg, "mimic-estimate");
    const int s = cfg.variants[0].noise.space();

    TransitionCounts counts(s);
    for (const auto& vruns : ctx.result.runs)
        for (const auto& run : vruns) counts.ingest_run(run);
    auto est = counts.estimate(0, p.smoothing);

    Vec law = p.label_law.empty()
                  ? Vec(Vec::Constant(ok.num_labels, 1.0 / ok.num_labels))
                  : Eigen::Map<const Vec>(p.label_law.data(), p.label_law.size()).eval();
    Kernel exact = exact_mimic_kernel(ok, Vec::Zero(cfg.dim), Distribution(law));

    double max_tv = 0.0;
    for (int z = 0; z < s; ++z)
        if (est.visited[z]) max_tv = std::max(max_tv, row_tv(est.kernel, exact, z));

    double fidelity = std::numeric_limits<double>::quiet_NaN();
    Decomposition d = doeblin_decompose(exact);
    if (d.num_classes() == 1) {
        const Distribution& pi = d.extremals[0];
        fidelity = mimic_fidelity(pair_law(exact, pi), est.kernel, pi);
    }

    if (ctx.write_files) {
        auto cf = open_out(ctx.out / "mimic_counts.csv");
        counts.export_csv(cf);
        auto kf = open_out(ctx.out / "mimic_estimated.kernel");
        est.kernel.print(kf);
        auto xf = open_out(ctx.out / "mimic_exact.kernel");
        exact.print(xf);
    }
    ctx.result.summary["mimic"]["max_row_tv"] = max_tv;
    ctx.result.summary["mimic"]["pair_law_tv"] = fidelity;
    std::ostringstream detail;
    detail << "max per-row TV " << max_tv << " (tolerance " << p.tol_tv << ") over "
           << counts.total(0) << " transitions";
    ctx.result.checks.push_back({"mimic-estimate", max_tv <= p.tol_tv, detail.str()});
}

void pass_mimic_compare(PassContext& ctx, const MimicComparePass& p) {
    const auto& cfg = ctx.cfg;
    const OrderKSpec& ok = require_orderk(cfg, "mimic-compare");
    const VariantConfig& vc = cfg.variants[0];

    std::ostringstream csv;
    csv << "replica,label,final_orig,final_mimic,diff\n";
    double worst = 0.0;
    int pairs = 0;
    for (std::size_t r = 0; r < ctx.result.runs[0].size(); ++r) {
        const SaRun& orig = ctx.result.runs[0][r];
        int start = vc.cycle_start ? int((vc.noise.start_state + r) % std::size_t(vc.noise.space()))
                                   : vc.noise.start_state;
        int label;
        if (ok.k == 0) {
            label = summary_label(ok.summary, {start}, vc.noise.space(), ok.num_labels);
        } else if (vc.expected_label >= 0) {
            label = vc.expected_label;
        } else {
            throw UnresolvableLabel(
                "mimic-compare: k > 0 needs an expected_label on the variant");
        }
        Kernel mimic = exact_mimic_kernel(ok, Vec::Zero(cfg.dim),
                                          Distribution::dirac(label, ok.num_labels));
        RunConfig rc;
        rc.dim = cfg.dim;
        rc.x0 = cfg.x0;
        rc.drift = cfg.drift;
        rc.noise = NoiseSpec{MarkovSpec{ParamKernel::constant(std::move(mimic))}, start};
        rc.schedule = cfg.schedule;
        rc.schedule_override = cfg.schedule_override;
        rc.martingale = cfg.martingale;
        rc.horizon = cfg.horizon;
        rc.seed = cfg.seed;
        rc.stream = kRerunOffset + r;
        rc.radius = cfg.radius;
        rc.dense_prefix = cfg.dense_prefix;
        SaRun twin = run_sa(rc);
        double diff = (orig.final_x - twin.final_x).norm();
        worst = std::max(worst, diff);
        ++pairs;
        csv << r << ',' << label << ',' << csv_num(orig.final_x(0)) << ','
            << csv_num(twin.final_x(0)) << ',' << csv_num(diff) << '\n';
    }
    if (ctx.write_files) open_out(ctx.out / "mimic_compare.csv") << csv.str();
    ctx.result.summary["mimic_compare"]["max_diff"] = worst;
    std::ostringstream detail;
    detail << "max |final_x difference| " << worst << " over " << pairs
           << " seed pairs (tolerance " << p.tol << ")";
    ctx.result.checks.push_back({"mimic-compare", pairs > 0 && worst <= p.tol, detail.str()});
}

void pass_decompose(PassContext& ctx, const DecomposePass& p) {
    const auto& cfg = ctx.cfg;
    std::optional<Kernel> kernel;
    std::vector<bool> visited;
    if (p.source == "estimated") {
        const int s = cfg.variants.at(0).noise.space();
        TransitionCounts counts(s);
        for (const auto& vruns : ctx.result.runs)
            for (const auto& run : vruns) counts.ingest_run(run);
        auto est = counts.estimate(0, p.smoothing);
        kernel = est.kernel;
        visited = est.visited;
    } else {
        kernel = reference_kernel(cfg.variants.at(0), cfg.dim);
        if (!kernel) {
            ctx.result.checks.push_back(
                {"decompose", false, "no reference kernel for this noise variant"});
            return;
        }
        visited.assign(kernel->size(), true);
    }
    Decomposition d = doeblin_decompose(*kernel);
    std::ostringstream csv;
    csv << "class,state,extremal_weight,gap\n";
    json classes = json::array();
    for (int c = 0; c < d.num_classes(); ++c) {
        // Self-loops at unvisited states create spurious singleton classes in
        // estimated kernels; report only classes touching visited states.
        bool seen = std::any_of(d.classes[c].begin(), d.classes[c].end(),
                                [&](int z) { return visited[z]; });
        if (!seen) continue;
        json cls;
        cls["states"] = d.classes[c];
        cls["gap"] = d.gaps[c];
        classes.push_back(cls);
        for (int z : d.classes[c])
            csv << c << ',' << z << ',' << csv_num(d.extremals[c](z)) << ','
                << csv_num(d.gaps[c]) << '\n';
    }
    if (ctx.write_files) open_out(ctx.out / "decomposition.csv") << csv.str();
    ctx.result.summary["decomposition"]["classes"] = classes;
    ctx.result.summary["decomposition"]["transient"] = d.transient;
    ctx.result.checks.push_back(
        {"decompose", true,
         std::to_string(classes.size()) + " closed classes among visited states"});
}

void pass_ode_track(PassContext& ctx, const OdeTrackPass& p) {
    const auto& cfg = ctx.cfg;
    int total = 0, success = 0;
    std::ostringstream csv;
    csv << "variant,replica,anchor,sup_error\n";
    for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
        AveragedField field = variant_field(cfg, cfg.variants[v]);
        if (ctx.result.runs[v].empty()) continue;
        double t_end = ctx.result.runs[v].front().final_t;
        double hi = t_end - p.window;
        if (!(hi > p.t_lo))
            throw OutOfDomain("ode-track: window leaves no room for anchors");
        std::vector<double> anchors(p.anchors);
        for (int i = 0; i < p.anchors; ++i)
            anchors[i] = p.t_lo * std::pow(hi / p.t_lo, double(i) / (p.anchors - 1));
        double first_cut = anchors.front() * 10.0;
        double last_cut = anchors.back() / 10.0;
        for (std::size_t r = 0; r < ctx.result.runs[v].size(); ++r) {
            auto errors = tracking_error(ctx.result.runs[v][r], field, p.window,
                                         anchors, p.dt);
            std::vector<double> first, last;
            for (std::size_t i = 0; i < anchors.size(); ++i) {
                csv << cfg.variants[v].name << ',' << r << ',' << csv_num(anchors[i])
                    << ',' << csv_num(errors[i]) << '\n';
                if (anchors[i] <= first_cut)
                    first.push_back(errors[i]);
                else if (anchors[i] >= last_cut)
                    last.push_back(errors[i]);
            }
            ++total;
            if (!first.empty() && !last.empty() && median(last) < median(first))
                ++success;
        }
    }
    if (ctx.write_files) open_out(ctx.out / "tracking.csv") << csv.str();
    ctx.result.summary["ode_track"]["successes"] = success;
    ctx.result.summary["ode_track"]["total"] = total;
    std::ostringstream detail;
    detail << success << "/" << total
           << " replicas with last-decade median sup-error below the first decade"
           << " (need " << p.min_success << ")";
    ctx.result.checks.push_back({"ode-track", success >= p.min_success, detail.str()});
}

void pass_equilibria(PassContext& ctx, const EquilibriaPass& p) {
    const auto& cfg = ctx.cfg;
    bool all_ok = true;
    std::ostringstream csv;
    csv << "variant,equilibrium\n";
    std::ostringstream detail;
    for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
        AveragedField field = variant_field(cfg, cfg.variants[v]);
        Vec lo = Vec::Constant(cfg.dim, p.lo);
        Vec hi = Vec::Constant(cfg.dim, p.hi);
        auto zeros = find_equilibria(field, lo, hi, p.grid);
        for (const Vec& z : zeros)
            csv << cfg.variants[v].name << ',' << csv_num(z(0)) << '\n';
        const auto& runs = ctx.result.runs[v];
        double dispersion = 0.0;
        for (std::size_t a = 0; a < runs.size(); ++a)
            for (std::size_t b = a + 1; b < runs.size(); ++b)
                dispersion = std::max(dispersion,
                                      (runs[a].final_x - runs[b].final_x).norm());
        bool converged = dispersion < p.dispersion_tol;
        int near = 0;
        for (const auto& run : runs) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec& z : zeros) best = std::min(best, (run.final_x - z).norm());
            if (best <= p.tol) ++near;
        }
        bool ok = !converged || near == int(runs.size());
        all_ok = all_ok && ok;
        detail << cfg.variants[v].name << ": " << zeros.size() << " equilibria, "
               << near << "/" << runs.size() << " finals within " << p.tol
               << (converged ? " (converged)" : " (not converged)") << "; ";
    }
    if (ctx.write_files) open_out(ctx.out / "equilibria.csv") << csv.str();
    ctx.result.checks.push_back({"equilibria", all_ok, detail.str()});
}

Objective objective_by_name(const std::string& name, const Vec& values) {
    if (name == "quadratic") return quadratic_objective();
    if (name == "shifted-quadratic") return shifted_quadratic_objective(values);
    if (name == "linear-state") return linear_state_objective(values);
    if (name == "quartic") return quartic_objective();
    throw UnknownFamily("objective: unknown family \"" + name + "\"");
}

void pass_gradient_gap(PassContext& ctx, const GradientGapPass& p) {
    const auto& cfg = ctx.cfg;
    const auto* mk = as_markov(cfg.variants.at(0).noise);
    if (!mk) {
        ctx.result.checks.push_back(
            {"gradient-gap", false, "variant 0 must use Markov noise"});
        return;
    }
    Objective obj = objective_by_name(p.objective, cfg.state_values);
    Vec x = Vec::Constant(cfg.dim, p.x);
    GradientGap gap = averaged_gradient_gap(obj, mk->kernel, x);
    ParamKernel frozen = ParamKernel::constant(mk->kernel.at(x));
    GradientGap gap0 = averaged_gradient_gap(obj, frozen, x);

    std::ostringstream csv;
    csv << "x,lhs,rhs,gap\n"
        << csv_num(p.x) << ',' << csv_num(gap.lhs(0)) << ',' << csv_num(gap.rhs(0))
        << ',' << csv_num(gap.gap(0)) << '\n';
    if (ctx.write_files) open_out(ctx.out / "gradient_gap.csv") << csv.str();

    double chain_err = (gap.gap - gap.chain_rule_term).lpNorm<Eigen::Infinity>();
    double const_gap = gap0.gap.lpNorm<Eigen::Infinity>();
    bool ok = chain_err <= p.tol && const_gap <= p.const_tol;
    std::ostringstream detail;
    detail << "gap " << gap.gap(0) << ", chain-rule residual " << chain_err
           << " (tol " << p.tol << "), x-independent control " << const_gap << " (tol "
           << p.const_tol << ")";
    if (p.expected_gap) {
        double err = std::abs(gap.gap(0) - *p.expected_gap);
        ok = ok && err <= p.tol;
        detail << ", |gap - expected| " << err;
    }
    ctx.result.summary["gradient_gap"]["lhs"] = gap.lhs(0);
    ctx.result.summary["gradient_gap"]["rhs"] = gap.rhs(0);
    ctx.result.summary["gradient_gap"]["gap"] = gap.gap(0);
    ctx.result.checks.push_back({"gradient-gap", ok, detail.str()});
}

void pass_settle(PassContext& ctx, const SettlePass& p) {
    const auto& cfg = ctx.cfg;
    std::ostringstream csv;
    csv << "variant,replica,settle_step\n";
    bool all = true;
    for (std::size_t v = 0; v < cfg.variants.size(); ++v)
        for (std::size_t r = 0; r < ctx.result.runs[v].size(); ++r) {
            long long s = ctx.result.runs[v][r].settle_entry;
            csv << cfg.variants[v].name << ',' << r << ',' << s << '\n';
            if (s < 0 || s >= cfg.horizon) all = false;
        }
    if (ctx.write_files) open_out(ctx.out / "settle.csv") << csv.str();
    std::ostringstream detail;
    detail << "every replica inside the " << p.tol
           << "-band of its equilibrium before the horizon";
    ctx.result.checks.push_back({"settle", all, detail.str()});
}

void pass_settle_compare(PassContext& ctx, const SettleComparePass& p) {
    const auto& cfg = ctx.cfg;
    if (cfg.variants.size() != 2) {
        ctx.result.checks.push_back(
            {"settle-compare", false, "needs exactly two variants"});
        return;
    }
    std::vector<double> gaps;
    for (const auto& vc : cfg.variants) {
        auto ref = reference_kernel(vc, cfg.dim);
        Decomposition d = doeblin_decompose(*ref);
        gaps.push_back(d.gaps.at(0));
    }
    std::size_t slow = gaps[0] < gaps[1] ? 0 : 1;
    std::size_t fast = 1 - slow;
    int total = 0, success = 0;
    for (std::size_t r = 0;
         r < std::min(ctx.result.runs[slow].size(), ctx.result.runs[fast].size()); ++r) {
        double s = double(std::max<long long>(ctx.result.runs[slow][r].settle_entry, 1));
        double f = double(std::max<long long>(ctx.result.runs[fast][r].settle_entry, 1));
        ++total;
        if (s >= p.min_ratio * f) ++success;
    }
    ctx.result.summary["settle_compare"]["slow_variant"] = cfg.variants[slow].name;
    ctx.result.summary["settle_compare"]["gaps"] = gaps;
    std::ostringstream detail;
    detail << success << "/" << total << " seeds with settle-time ratio >= "
           << p.min_ratio << " (small gap " << gaps[slow] << " vs " << gaps[fast]
           << ", need " << p.min_success << ")";
    ctx.result.checks.push_back(
        {"settle-compare", success >= p.min_success, detail.str()});
}

} // namespace

ScenarioResult run_scenario(const ExperimentConfig& cfg, bool write_files) {
    ScenarioResult result;
    result.runs.resize(cfg.variants.size());
    fs::path out(cfg.output);
    if (write_files) {
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw IoFailure("cannot create output directory " + out.string());
    }

    // Settle probes are configured per variant before the runs start.
    std::optional<SettlePass> settle_pass;
    for (const auto& p : cfg.passes)
        if (const auto* sp = std::get_if<SettlePass>(&p)) settle_pass = *sp;
    std::vector<std::optional<SettleProbe>> probes(cfg.variants.size());
    if (settle_pass) {
        for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
            auto ref = reference_kernel(cfg.variants[v], cfg.dim);
            if (!ref) continue;
            double target = class_mean(*ref, cfg.state_values,
                                       cfg.variants[v].noise.start_state);
            probes[v] = SettleProbe{Vec::Constant(cfg.dim, target), settle_pass->tol};
        }
    }

    if (cfg.replicas == 0)
        result.warnings.push_back("replicas = 0: no trajectories were produced");

    // Replicas run in a fixed-size worker pool; each owns its RNG stream, so
    // the bundle is byte-identical for any thread count.
    struct Task {
        std::size_t variant;
        int replica;
    };
    std::vector<Task> tasks;
    for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
        result.runs[v].resize(cfg.replicas);
        for (int r = 0; r < cfg.replicas; ++r) tasks.push_back({v, r});
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::string first_error;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            const VariantConfig& vc = cfg.variants[task.variant];
            try {
                RunConfig rc;
                rc.dim = cfg.dim;
                rc.x0 = cfg.x0;
                rc.drift = cfg.drift;
                rc.noise = vc.noise;
                if (vc.cycle_start)
                    rc.noise.start_state =
                        (vc.noise.start_state + task.replica) % vc.noise.space();
                rc.schedule = cfg.schedule;
                rc.schedule_override = cfg.schedule_override;
                rc.martingale = cfg.martingale;
                rc.horizon = cfg.horizon;
                rc.seed = cfg.seed;
                rc.stream = task.variant * kVariantStride + std::uint64_t(task.replica);
                rc.radius = cfg.radius;
                rc.record_full_noise = cfg.record_full_noise;
                rc.dense_prefix = cfg.dense_prefix;
                rc.settle = probes[task.variant];
                result.runs[task.variant][task.replica] = run_sa(rc);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (first_error.empty())
                    first_error = "variant \"" + vc.name + "\" replica " +
                                  std::to_string(task.replica) + ": " + e.what();
            }
        }
    };
    unsigned pool = std::min<unsigned>(
        4, std::max<unsigned>(1, std::thread::hardware_concurrency()));
    std::vector<std::thread> threads;
    for (unsigned i = 0; i < std::min<std::size_t>(pool, tasks.size()); ++i)
        threads.emplace_back(worker);
    for (auto& th : threads) th.join();
    if (!first_error.empty()) throw Error(first_error);

    // Tail-class labels against each variant's reference decomposition.
    std::vector<std::optional<Decomposition>> ref_decomp(cfg.variants.size());
    for (std::size_t v = 0; v < cfg.variants.size(); ++v)
        if (auto ref = reference_kernel(cfg.variants[v], cfg.dim))
            ref_decomp[v] = doeblin_decompose(*ref);

    json variants_json = json::array();
    for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
        json replicas_json = json::array();
        for (int r = 0; r < cfg.replicas; ++r) {
            const SaRun& run = result.runs[v][r];
            if (write_files) {
                auto f = open_out(out / (cfg.variants[v].name + "-replica-" +
                                         std::to_string(r) + ".csv"));
                export_run_csv(run, f);
            }
            json rj;
            rj["replica"] = r;
            rj["final_x"] = std::vector<double>(run.final_x.data(),
                                                run.final_x.data() + run.final_x.size());
            rj["final_t"] = run.final_t;
            rj["tail_class"] = ref_decomp[v] ? tail_class(*ref_decomp[v], run) : -1;
            if (run.settle_entry >= 0) rj["settle_step"] = run.settle_entry;
            replicas_json.push_back(std::move(rj));
        }
        json vj;
        vj["name"] = cfg.variants[v].name;
        vj["replicas"] = std::move(replicas_json);
        variants_json.push_back(std::move(vj));
    }
    result.summary["scenario"] = cfg.scenario;
    result.summary["seed"] = cfg.seed;
    result.summary["variants"] = std::move(variants_json);

    PassContext ctx{cfg, result, write_files, out};
    for (const auto& p : cfg.passes)
        std::visit(
            [&](const auto& pass) {
                using T = std::decay_t<decltype(pass)>;
                if constexpr (std::is_same_v<T, ClassMemoryPass>)
                    pass_class_memory(ctx, pass);
                else if constexpr (std::is_same_v<T, MimicEstimatePass>)
                    pass_mimic_estimate(ctx, pass);
                else if constexpr (std::is_same_v<T, MimicComparePass>)
                    pass_mimic_compare(ctx, pass);
                else if constexpr (std::is_same_v<T, DecomposePass>)
                    pass_decompose(ctx, pass);
                else if constexpr (std::is_same_v<T, OdeTrackPass>)
                    pass_ode_track(ctx, pass);
                else if constexpr (std::is_same_v<T, EquilibriaPass>)
                    pass_equilibria(ctx, pass);
                else if constexpr (std::is_same_v<T, GradientGapPass>)
                    pass_gradient_gap(ctx, pass);
                else if constexpr (std::is_same_v<T, SettlePass>)
                    pass_settle(ctx, pass);
                else if constexpr (std::is_same_v<T, SettleComparePass>)
                    pass_settle_compare(ctx, pass);
            },
            p);

    json checks_json = json::array();
    for (const auto& c : result.checks) {
        json cj;
        cj["name"] = c.name;
        cj["pass"] = c.pass;
        cj["detail"] = c.detail;
        checks_json.push_back(std::move(cj));
    }
    result.summary["checks"] = std::move(checks_json);
    result.summary["warnings"] = result.warnings;
    result.ok = result.all_pass();
    result.summary["ok"] = result.ok;
    if (write_files) open_out(out / "summary.json") << result.summary.dump(2) << "\n";
    return result;
}

} // namespace salab
