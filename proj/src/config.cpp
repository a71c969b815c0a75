#include "salab/config.hpp"

#include <sstream>

#include "salab/grad.hpp"

namespace salab {

namespace {

using nlohmann::json;

struct Issue {
    std::string path;
    std::string reason;
    enum Kind { Schema, Family, Schedule } kind = Schema;
};

struct Collector {
    std::vector<Issue> issues;

    void add(std::string path, std::string reason, Issue::Kind kind = Issue::Schema) {
        issues.push_back({std::move(path), std::move(reason), kind});
    }

    void raise_if_any() const {
        if (issues.empty()) return;
        std::ostringstream msg;
        for (const auto& i : issues) msg << i.path << ": " << i.reason << "\n";
        if (issues.size() == 1) {
            if (issues[0].kind == Issue::Family) throw UnknownFamily(msg.str());
            if (issues[0].kind == Issue::Schedule) throw InvalidSchedule(msg.str());
        }
        throw SchemaError(msg.str());
    }
};

double get_num(const json& j, const std::string& path, const char* key, double dflt,
               Collector& c) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number()) {
        c.add(path + "." + key, "expected a number");
        return dflt;
    }
    return j[key].get<double>();
}

long long get_int(const json& j, const std::string& path, const char* key,
                  long long dflt, Collector& c) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number_integer()) {
        c.add(path + "." + key, "expected an integer");
        return dflt;
    }
    return j[key].get<long long>();
}

std::string get_str(const json& j, const std::string& path, const char* key,
                    const std::string& dflt, Collector& c) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_string()) {
        c.add(path + "." + key, "expected a string");
        return dflt;
    }
    return j[key].get<std::string>();
}

Vec get_vec(const json& j, const std::string& path, Collector& c) {
    if (!j.is_array()) {
        c.add(path, "expected an array of numbers");
        return Vec();
    }
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            c.add(path + "[" + std::to_string(i) + "]", "expected a number");
            return Vec();
        }
        v(i) = j[i].get<double>();
    }
    return v;
}

std::optional<Kernel> get_matrix(const json& j, const std::string& path, Collector& c) {
    if (!j.is_array() || j.empty()) {
        c.add(path, "expected a nonempty array of rows");
        return std::nullopt;
    }
    Mat m(j.size(), j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != j.size()) {
            c.add(path + "[" + std::to_string(i) + "]", "expected a square row");
            return std::nullopt;
        }
        for (std::size_t k = 0; k < j.size(); ++k) {
            if (!j[i][k].is_number()) {
                c.add(path + "[" + std::to_string(i) + "]", "expected numbers");
                return std::nullopt;
            }
            m(i, k) = j[i][k].get<double>();
        }
    }
    try {
        return Kernel(std::move(m));
    } catch (const Error& e) {
        c.add(path, e.what());
        return std::nullopt;
    }
}

std::optional<ParamKernel> parse_param_kernel(const json& j, const std::string& path,
                                              Collector& c) {
    if (!j.is_object()) {
        c.add(path, "expected a kernel object");
        return std::nullopt;
    }
    std::string family = get_str(j, path, "family", "", c);
    if (family == "constant") {
        if (!j.contains("matrix")) {
            c.add(path + ".matrix", "required for constant kernels");
            return std::nullopt;
        }
        auto k = get_matrix(j["matrix"], path + ".matrix", c);
        if (!k) return std::nullopt;
        return ParamKernel::constant(std::move(*k));
    }
    if (family == "logistic-tilt") {
        if (!j.contains("weight")) {
            c.add(path + ".weight", "required for logistic-tilt kernels");
            return std::nullopt;
        }
        Vec w = get_vec(j["weight"], path + ".weight", c);
        if (w.size() == 0) return std::nullopt;
        return ParamKernel::logistic_tilt(std::move(w));
    }
    if (family == "softmax-mix") {
        if (!j.contains("matrix_a") || !j.contains("matrix_b") || !j.contains("weight")) {
            c.add(path, "softmax-mix needs matrix_a, matrix_b and weight");
            return std::nullopt;
        }
        auto a = get_matrix(j["matrix_a"], path + ".matrix_a", c);
        auto b = get_matrix(j["matrix_b"], path + ".matrix_b", c);
        Vec w = get_vec(j["weight"], path + ".weight", c);
        if (!a || !b || w.size() == 0) return std::nullopt;
        return ParamKernel::softmax_mix(std::move(*a), std::move(*b), std::move(w));
    }
    c.add(path + ".family", "unknown kernel family \"" + family + "\"", Issue::Family);
    return std::nullopt;
}

std::optional<SummaryFamily> parse_summary(const std::string& s, const std::string& path,
                                           Collector& c) {
    if (s == "first-state") return SummaryFamily::FirstState;
    if (s == "last-state") return SummaryFamily::LastState;
    if (s == "half-split") return SummaryFamily::HalfSplit;
    if (s == "sum-mod") return SummaryFamily::SumMod;
    c.add(path, "unknown summary family \"" + s + "\"", Issue::Family);
    return std::nullopt;
}

std::optional<NoiseSpec> parse_noise(const json& j, const std::string& path,
                                     Collector& c) {
    if (!j.is_object()) {
        c.add(path, "expected a noise object");
        return std::nullopt;
    }
    NoiseSpec spec;
    spec.start_state = int(get_int(j, path, "start_state", 0, c));
    std::string variant = get_str(j, path, "variant", "", c);
    if (variant == "markov") {
        if (!j.contains("kernel")) {
            c.add(path + ".kernel", "required for markov noise");
            return std::nullopt;
        }
        auto pk = parse_param_kernel(j["kernel"], path + ".kernel", c);
        if (!pk) return std::nullopt;
        spec.model = MarkovSpec{std::move(*pk)};
        return spec;
    }
    if (variant == "orderk") {
        OrderKSpec ok;
        ok.k = int(get_int(j, path, "k", 0, c));
        ok.num_labels = int(get_int(j, path, "labels", 1, c));
        auto fam = parse_summary(get_str(j, path, "summary", "first-state", c),
                                 path + ".summary", c);
        if (fam) ok.summary = *fam;
        if (!j.contains("conditional") || !j["conditional"].is_array()) {
            c.add(path + ".conditional", "expected an array of kernels");
            return std::nullopt;
        }
        for (std::size_t i = 0; i < j["conditional"].size(); ++i) {
            auto pk = parse_param_kernel(j["conditional"][i],
                                         path + ".conditional[" + std::to_string(i) + "]",
                                         c);
            if (!pk) return std::nullopt;
            ok.conditional.push_back(std::move(*pk));
        }
        if (int(ok.conditional.size()) != ok.num_labels)
            c.add(path + ".conditional",
                  "expected one kernel per label (" + std::to_string(ok.num_labels) + ")");
        if (j.contains("warmup")) {
            auto pk = parse_param_kernel(j["warmup"], path + ".warmup", c);
            if (pk) ok.warmup = std::move(*pk);
        } else if (ok.k > 0) {
            c.add(path + ".warmup", "required when k > 0");
        }
        spec.model = std::move(ok);
        return spec;
    }
    if (variant == "stopped-sum") {
        StoppedSumSpec ss;
        ss.alpha = get_num(j, path, "alpha", 0.5, c);
        ss.mark_dim = int(get_int(j, path, "mark_dim", 1, c));
        ss.mark_bound = get_num(j, path, "mark_bound", 1.0, c);
        std::string marks = get_str(j, path, "marks", "rademacher", c);
        if (marks == "rademacher")
            ss.marks = MarkDistribution::Rademacher;
        else if (marks == "constant")
            ss.marks = MarkDistribution::Constant;
        else
            c.add(path + ".marks", "unknown mark distribution \"" + marks + "\"",
                  Issue::Family);
        std::string rule = get_str(j, path, "stop_rule", "deterministic", c);
        if (rule == "deterministic")
            ss.rule = StopRule::Deterministic;
        else if (rule == "geometric")
            ss.rule = StopRule::Geometric;
        else
            c.add(path + ".stop_rule", "unknown stopping rule \"" + rule + "\"",
                  Issue::Family);
        ss.period = get_int(j, path, "period", 1, c);
        ss.q = get_num(j, path, "q", 0.5, c);
        if (j.contains("bucket_edges") && j["bucket_edges"].is_array()) {
            for (std::size_t i = 0; i < j["bucket_edges"].size(); ++i) {
                Vec e = get_vec(j["bucket_edges"][i],
                                path + ".bucket_edges[" + std::to_string(i) + "]", c);
                ss.bucket_edges.emplace_back(e.data(), e.data() + e.size());
            }
        } else {
            ss.bucket_edges.assign(std::size_t(std::max(ss.mark_dim, 1)), {});
        }
        if (!j.contains("conditional") || !j["conditional"].is_array()) {
            c.add(path + ".conditional", "expected an array of kernels");
            return std::nullopt;
        }
        for (std::size_t i = 0; i < j["conditional"].size(); ++i) {
            auto pk = parse_param_kernel(j["conditional"][i],
                                         path + ".conditional[" + std::to_string(i) + "]",
                                         c);
            if (!pk) return std::nullopt;
            ss.conditional.push_back(std::move(*pk));
        }
        spec.model = std::move(ss);
        return spec;
    }
    c.add(path + ".variant", "unknown noise variant \"" + variant + "\"", Issue::Family);
    return std::nullopt;
}

std::optional<PassConfig> parse_pass(const json& j, const std::string& path,
                                     Collector& c) {
    std::string type = get_str(j, path, "type", "", c);
    if (type == "class-memory") {
        ClassMemoryPass p;
        p.own_tol = get_num(j, path, "own_tol", p.own_tol, c);
        p.other_min = get_num(j, path, "other_min", p.other_min, c);
        return p;
    }
    if (type == "mimic-estimate") {
        MimicEstimatePass p;
        p.smoothing = get_num(j, path, "smoothing", p.smoothing, c);
        p.tol_tv = get_num(j, path, "tol_tv", p.tol_tv, c);
        if (j.contains("label_law")) {
            Vec v = get_vec(j["label_law"], path + ".label_law", c);
            p.label_law.assign(v.data(), v.data() + v.size());
        }
        return p;
    }
    if (type == "mimic-compare") {
        MimicComparePass p;
        p.tol = get_num(j, path, "tol", p.tol, c);
        return p;
    }
    if (type == "decompose") {
        DecomposePass p;
        p.source = get_str(j, path, "source", p.source, c);
        p.smoothing = get_num(j, path, "smoothing", p.smoothing, c);
        return p;
    }
    if (type == "ode-track") {
        OdeTrackPass p;
        p.window = get_num(j, path, "window", p.window, c);
        p.dt = get_num(j, path, "dt", p.dt, c);
        p.t_lo = get_num(j, path, "t_lo", p.t_lo, c);
        p.anchors = int(get_int(j, path, "anchors", p.anchors, c));
        p.min_success = int(get_int(j, path, "min_success", p.min_success, c));
        return p;
    }
    if (type == "equilibria") {
        EquilibriaPass p;
        p.lo = get_num(j, path, "lo", p.lo, c);
        p.hi = get_num(j, path, "hi", p.hi, c);
        p.grid = int(get_int(j, path, "grid", p.grid, c));
        p.tol = get_num(j, path, "tol", p.tol, c);
        p.dispersion_tol = get_num(j, path, "dispersion_tol", p.dispersion_tol, c);
        return p;
    }
    if (type == "gradient-gap") {
        GradientGapPass p;
        p.objective = get_str(j, path, "objective", p.objective, c);
        p.x = get_num(j, path, "x", p.x, c);
        p.tol = get_num(j, path, "tol", p.tol, c);
        p.const_tol = get_num(j, path, "const_tol", p.const_tol, c);
        if (j.contains("expected_gap") && j["expected_gap"].is_number())
            p.expected_gap = j["expected_gap"].get<double>();
        return p;
    }
    if (type == "settle") {
        SettlePass p;
        p.tol = get_num(j, path, "tol", p.tol, c);
        return p;
    }
    if (type == "settle-compare") {
        SettleComparePass p;
        p.min_ratio = get_num(j, path, "min_ratio", p.min_ratio, c);
        p.min_success = int(get_int(j, path, "min_success", p.min_success, c));
        return p;
    }
    c.add(path + ".type", "unknown pass type \"" + type + "\"", Issue::Family);
    return std::nullopt;
}

} // namespace

Drift make_drift(const std::string& family, const Vec& state_values) {
    if (family == "value-tracking") {
        auto v = std::make_shared<Vec>(state_values);
        return {"value-tracking",
                [v](const Vec& x, int z) {
                    Vec h(1);
                    h(0) = (*v)(z)-x(0);
                    return h;
                },
                1.0};
    }
    if (family == "zero")
        return {"zero", [](const Vec& x, int) { return Vec(Vec::Zero(x.size())); }, 0.0};
    if (family == "sgd-quadratic") return sgd_drift(quadratic_objective());
    if (family == "sgd-shifted-quadratic")
        return sgd_drift(shifted_quadratic_objective(state_values));
    if (family == "sgd-linear-state")
        return sgd_drift(linear_state_objective(state_values));
    if (family == "sgd-quartic") return sgd_drift(quartic_objective());
    throw UnknownFamily("drift: unknown family \"" + family + "\"");
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
    Collector c;
    ExperimentConfig cfg;
    if (!doc.is_object()) {
        c.add("$", "expected a JSON object");
        c.raise_if_any();
    }
    cfg.scenario = get_str(doc, "$", "scenario", "unnamed", c);
    cfg.dim = int(get_int(doc, "$", "dim", 1, c));
    if (doc.contains("state_values"))
        cfg.state_values = get_vec(doc["state_values"], "$.state_values", c);
    if (doc.contains("schedule")) {
        const json& s = doc["schedule"];
        cfg.schedule.c = get_num(s, "$.schedule", "c", 1.0, c);
        cfg.schedule.gamma = get_num(s, "$.schedule", "gamma", 1.0, c);
        cfg.schedule.offset = get_int(s, "$.schedule", "offset", 1, c);
    }
    cfg.schedule_override = doc.value("schedule_override", false);
    if (!cfg.schedule_override) {
        ScheduleCheck check = validate_schedule(cfg.schedule);
        if (!check.ok) c.add("$.schedule", check.reason, Issue::Schedule);
    }
    if (doc.contains("martingale")) {
        const json& m = doc["martingale"];
        std::string fam = get_str(m, "$.martingale", "family", "none", c);
        if (fam == "none")
            cfg.martingale.family = MartingaleNoise::Family::None;
        else if (fam == "gaussian-scaled")
            cfg.martingale.family = MartingaleNoise::Family::GaussianScaled;
        else if (fam == "bounded-uniform")
            cfg.martingale.family = MartingaleNoise::Family::BoundedUniform;
        else
            c.add("$.martingale.family", "unknown family \"" + fam + "\"", Issue::Family);
        cfg.martingale.scale = get_num(m, "$.martingale", "scale", 0.0, c);
    }
    cfg.horizon = get_int(doc, "$", "horizon", 100000, c);
    if (cfg.horizon < 0) c.add("$.horizon", "must be nonnegative");
    cfg.replicas = int(get_int(doc, "$", "replicas", 1, c));
    if (cfg.replicas < 0) c.add("$.replicas", "must be nonnegative");
    cfg.seed = std::uint64_t(get_int(doc, "$", "seed", 0, c));
    cfg.radius = get_num(doc, "$", "radius", 1e3, c);
    if (!(cfg.radius > 0.0)) c.add("$.radius", "must be positive");
    if (doc.contains("x0")) cfg.x0 = get_vec(doc["x0"], "$.x0", c);
    cfg.dense_prefix = get_int(doc, "$", "dense_prefix", 1000, c);
    cfg.output = get_str(doc, "$", "output", "out", c);

    cfg.drift_family = get_str(doc.contains("drift") ? doc["drift"] : json::object(),
                               "$.drift", "family", "value-tracking", c);
    try {
        cfg.drift = make_drift(cfg.drift_family, cfg.state_values);
    } catch (const UnknownFamily& e) {
        c.add("$.drift.family", e.what(), Issue::Family);
    }

    if (doc.contains("variants") && doc["variants"].is_array()) {
        for (std::size_t i = 0; i < doc["variants"].size(); ++i) {
            const json& v = doc["variants"][i];
            std::string path = "$.variants[" + std::to_string(i) + "]";
            VariantConfig vc;
            vc.name = get_str(v, path, "name", "v" + std::to_string(i), c);
            vc.expected_label = int(get_int(v, path, "expected_label", -1, c));
            vc.cycle_start = v.value("cycle_start", false);
            if (!v.contains("noise")) {
                c.add(path + ".noise", "required");
                continue;
            }
            auto ns = parse_noise(v["noise"], path + ".noise", c);
            if (ns) {
                vc.noise = std::move(*ns);
                cfg.variants.push_back(std::move(vc));
            }
        }
    } else if (doc.contains("noise")) {
        auto ns = parse_noise(doc["noise"], "$.noise", c);
        if (ns) cfg.variants.push_back({"main", std::move(*ns), -1, false});
    } else {
        c.add("$.noise", "a noise spec (or variants list) is required");
    }

    if (doc.contains("passes") && doc["passes"].is_array()) {
        for (std::size_t i = 0; i < doc["passes"].size(); ++i) {
            auto p = parse_pass(doc["passes"][i], "$.passes[" + std::to_string(i) + "]", c);
            if (p) cfg.passes.push_back(std::move(*p));
        }
    }
    for (const auto& p : cfg.passes) {
        if (std::holds_alternative<MimicEstimatePass>(p)) cfg.record_full_noise = true;
        if (const auto* dp = std::get_if<DecomposePass>(&p))
            if (dp->source == "estimated") cfg.record_full_noise = true;
    }

    // Cross checks that need the assembled pieces.
    for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
        const auto& vc = cfg.variants[i];
        int s = vc.noise.space();
        if (cfg.state_values.size() > 0 && cfg.state_values.size() != s)
            c.add("$.state_values", "length " + std::to_string(cfg.state_values.size()) +
                                        " does not match state space " +
                                        std::to_string(s) + " of variant " + vc.name);
    }
    if (cfg.drift_family == "value-tracking" && cfg.state_values.size() == 0)
        c.add("$.state_values", "required by the value-tracking drift");

    c.raise_if_any();
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

} // namespace salab
