#pragma once

#include <string>
#include <vector>

#include "imdd/channel.hpp"
#include "imdd/experiment.hpp"

namespace imdd::cfg {

// Raised on malformed config text, unknown keys or invariant
// violations (maps to CLI exit code 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TxConfig {
    double rolloff = 0.4;
    int sps = 4;
    int rrc_span = 64;
    int dac_bits = 8;
    std::string awg_preset;      // "paper-awg", "desk-awg" or ""
    double awg_rate_hz = 0.0;    // explicit rate; 0 = use preset / none
};

struct RxConfig {
    int l1 = 311, l2 = 11, l3 = 11;
    double train_fraction = 0.2;
    experiment::ThresholdMode threshold_mode =
        experiment::ThresholdMode::MapPooled;
    double timing_loop_bw = 2e-3;
};

struct ScenarioConfig {
    std::string label;      // empty = generated from the parameters
    double baud = 0.0;
    bool uniform = true;
    double alpha = 0.0;     // required > 0 for cap shaping
    double entropy = 0.0;   // 0 = solve from the rate plan
};

struct ExperimentConfig {
    double net_rate = 200e9;
    int m = 3;
    double r_fec = 1.0 / 1.07;
    std::vector<ScenarioConfig> scenarios;

    TxConfig tx;
    channel::LinkConfig link;
    RxConfig rx;
    experiment::SweepSpec sweep;
    double threshold_ber = 3.8e-3;
    std::string out_dir = "results";
    bool allow_rate_mismatch = false;
};

// Parses and validates JSON config text. Unknown keys are rejected by
// name; each declared (baud, entropy) pair must close the spectral
// efficiency equation within 0.5% unless allow_rate_mismatch is set.
ExperimentConfig parse_config(const std::string& json_text);

// Canonical JSON of the validated form; parse(serialize(c)) == c.
std::string serialize(const ExperimentConfig& config);

// Built-in experiment presets: "paper-b2b", "paper-5km", "desk-scale".
std::string preset_config(const std::string& name);
std::vector<std::string> preset_names();

// Applies one dotted-path override ("section.key=value") to config
// text; the value is parsed as JSON when possible, else as a string.
std::string apply_override(const std::string& json_text,
                           const std::string& dotted_key,
                           const std::string& value);

// AWG sample rate for a symbol rate under a named preset table.
double awg_rate_for_baud(const std::string& preset, double baud);

// Fully resolved per-scenario specs (shaping solved, AWG rate fixed).
std::vector<experiment::ScenarioSpec> expand_scenarios(
    const ExperimentConfig& config);

// Runs every scenario sweep, writes artifacts into config.out_dir and
// prints a summary table. Returns 0 on success, 2 when any scenario
// or sensitivity extraction failed (partial results are kept).
int run_experiment(const ExperimentConfig& config);

}  // namespace imdd::cfg
