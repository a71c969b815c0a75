#include "salab/scenario.hpp"

namespace salab {

namespace {

struct Preset {
    const char* name;
    const char* description;
    const char* text;
};

// Shipped end-to-end scenarios. Kept as raw JSON so `preset --print` and the
// config parser exercise the same path as user-supplied files.
const Preset kPresets[] = {
    {"class-memory",
     "iterates lock onto the stationary mean of the class picked by the frozen label",
     R"json({
  "scenario": "class-memory",
  "dim": 1,
  "state_values": [0.0, 0.2, 0.8, 1.0],
  "x0": [0.5],
  "drift": {"family": "value-tracking"},
  "schedule": {"c": 1.0, "gamma": 1.0, "offset": 1},
  "horizon": 1000000,
  "replicas": 20,
  "seed": 2026,
  "output": "out/class-memory",
  "variants": [
    {
      "name": "low-class",
      "expected_label": 0,
      "noise": {
        "variant": "orderk",
        "k": 1,
        "summary": "half-split",
        "labels": 2,
        "start_state": 0,
        "warmup": {"family": "constant", "matrix": [
          [0.5, 0.5, 0.0, 0.0],
          [0.5, 0.5, 0.0, 0.0],
          [0.0, 0.0, 0.5, 0.5],
          [0.0, 0.0, 0.5, 0.5]]},
        "conditional": [
          {"family": "constant", "matrix": [
            [0.5, 0.5, 0.0, 0.0],
            [0.5, 0.5, 0.0, 0.0],
            [0.5, 0.5, 0.0, 0.0],
            [0.5, 0.5, 0.0, 0.0]]},
          {"family": "constant", "matrix": [
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 0.5, 0.5]]}
        ]
      }
    },
    {
      "name": "high-class",
      "expected_label": 1,
      "noise": {
        "variant": "orderk",
        "k": 1,
        "summary": "half-split",
        "labels": 2,
        "start_state": 3,
        "warmup": {"family": "constant", "matrix": [
          [0.5, 0.5, 0.0, 0.0],
          [0.5, 0.5, 0.0, 0.0],
          [0.0, 0.0, 0.5, 0.5],
          [0.0, 0.0, 0.5, 0.5]]},
        "conditional": [
          {"family": "constant", "matrix": [
            [0.5, 0.5, 0.0, 0.0],
            [0.5, 0.5, 0.0, 0.0],
            [0.5, 0.5, 0.0, 0.0],
            [0.5, 0.5, 0.0, 0.0]]},
          {"family": "constant", "matrix": [
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 0.5, 0.5]]}
        ]
      }
    }
  ],
  "passes": [
    {"type": "class-memory", "own_tol": 0.02, "other_min": 0.4},
    {"type": "decompose", "source": "configured"}
  ]
})json"},
    {"mimic-fidelity",
     "estimated pair-marginal kernel matches the analytic posterior-mixture kernel",
     R"json({
  "scenario": "mimic-fidelity",
  "dim": 1,
  "state_values": [0.0, 1.0],
  "x0": [0.5],
  "drift": {"family": "value-tracking"},
  "schedule": {"c": 1.0, "gamma": 1.0, "offset": 1},
  "horizon": 100000,
  "replicas": 20,
  "seed": 7,
  "output": "out/mimic-fidelity",
  "variants": [
    {
      "name": "two-regime",
      "cycle_start": true,
      "noise": {
        "variant": "orderk",
        "k": 0,
        "summary": "first-state",
        "labels": 2,
        "start_state": 0,
        "conditional": [
          {"family": "constant", "matrix": [[0.9, 0.1], [0.5, 0.5]]},
          {"family": "constant", "matrix": [[0.4, 0.6], [0.6, 0.4]]}
        ]
      }
    }
  ],
  "passes": [
    {"type": "mimic-estimate", "smoothing": 0.0, "tol_tv": 0.01,
     "label_law": [0.5, 0.5]},
    {"type": "mimic-compare", "tol": 0.02},
    {"type": "decompose", "source": "estimated"}
  ]
})json"},
    {"ode-tracking",
     "interpolated iterates shadow the averaged ODE and land on its equilibrium",
     R"json({
  "scenario": "ode-tracking",
  "dim": 1,
  "state_values": [0.0, 1.0],
  "x0": [1.0],
  "drift": {"family": "value-tracking"},
  "schedule": {"c": 1.0, "gamma": 0.7, "offset": 1},
  "horizon": 100000,
  "replicas": 20,
  "seed": 11,
  "output": "out/ode-tracking",
  "variants": [
    {
      "name": "ergodic",
      "noise": {
        "variant": "markov",
        "start_state": 0,
        "kernel": {"family": "constant", "matrix": [[0.9, 0.1], [0.5, 0.5]]}
      }
    }
  ],
  "passes": [
    {"type": "ode-track", "window": 5.0, "dt": 0.001, "t_lo": 0.1,
     "anchors": 16, "min_success": 18},
    {"type": "equilibria", "lo": -2.0, "hi": 2.0, "grid": 40,
     "tol": 0.05, "dispersion_tol": 0.02}
  ]
})json"},
    {"gradient-gap",
     "averaged-gradient vs gradient-of-average gap equals the chain-rule term",
     R"json({
  "scenario": "gradient-gap",
  "dim": 1,
  "state_values": [0.0, 1.0],
  "drift": {"family": "sgd-linear-state"},
  "schedule": {"c": 1.0, "gamma": 1.0, "offset": 1},
  "horizon": 10,
  "replicas": 0,
  "seed": 3,
  "output": "out/gradient-gap",
  "variants": [
    {
      "name": "tilted",
      "noise": {
        "variant": "markov",
        "start_state": 0,
        "kernel": {"family": "logistic-tilt", "weight": [1.0]}
      }
    }
  ],
  "passes": [
    {"type": "gradient-gap", "objective": "linear-state", "x": 1.0,
     "tol": 0.0001, "const_tol": 0.000001,
     "expected_gap": 0.19661193324148185}
  ]
})json"},
    {"spectral-mixing",
     "settle times scale with the spectral gap: the slow chain needs far longer",
     R"json({
  "scenario": "spectral-mixing",
  "dim": 1,
  "state_values": [0.0, 1.0],
  "x0": [0.0],
  "drift": {"family": "value-tracking"},
  "schedule": {"c": 1.0, "gamma": 1.0, "offset": 1},
  "horizon": 200000,
  "replicas": 20,
  "seed": 19,
  "output": "out/spectral-mixing",
  "variants": [
    {
      "name": "fast-chain",
      "noise": {
        "variant": "markov",
        "start_state": 0,
        "kernel": {"family": "constant", "matrix": [[0.9, 0.1], [0.5, 0.5]]}
      }
    },
    {
      "name": "slow-chain",
      "noise": {
        "variant": "markov",
        "start_state": 0,
        "kernel": {"family": "constant",
                   "matrix": [[0.975, 0.025], [0.025, 0.975]]}
      }
    }
  ],
  "passes": [
    {"type": "settle", "tol": 0.05},
    {"type": "settle-compare", "min_ratio": 3.0, "min_success": 18},
    {"type": "decompose", "source": "configured"}
  ]
})json"},
};

const Preset& find_preset(const std::string& name) {
    for (const Preset& p : kPresets)
        if (name == p.name) return p;
    throw UnknownPreset("unknown preset \"" + name + "\"");
}

} // namespace

std::vector<std::pair<std::string, std::string>> list_presets() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Preset& p : kPresets) out.emplace_back(p.name, p.description);
    return out;
}

std::string preset_text(const std::string& name) { return find_preset(name).text; }

ExperimentConfig preset_config(const std::string& name) {
    return parse_config_text(find_preset(name).text);
}

} // namespace salab
