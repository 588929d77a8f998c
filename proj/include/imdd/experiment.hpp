#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "imdd/channel.hpp"
#include "imdd/rxdsp.hpp"
#include "imdd/shaping.hpp"
#include "imdd/txdsp.hpp"

namespace imdd::experiment {

enum class ThresholdMode { Midpoint, MapPooled, MapPerLevel };

// One transmit configuration of a sweep: rate plan, shaping choice and
// the DSP settings on both ends.
struct ScenarioSpec {
    std::string label;
    shaping::RatePlan plan;
    bool uniform = true;
    double alpha = 2.0;                  // cap shaping Gaussian order
    shaping::ShapedDistribution dist;    // filled for cap mode
    shaping::LevelAlphabet alphabet;

    double rolloff = 0.4;
    int sps = 4;
    int rrc_span = 64;
    int dac_bits = 8;
    double awg_rate_hz = 0.0;            // 0 = keep the pulse-shaping rate
    txdsp::Labeling labeling = txdsp::Labeling::Gray;

    int l1 = 311, l2 = 11, l3 = 11;
    double train_fraction = 0.2;
    ThresholdMode threshold_mode = ThresholdMode::MapPooled;
    rxdsp::TimingOptions timing;
};

struct SweepSpec {
    std::vector<double> rops_dbm;  // strictly increasing
    std::size_t n_symbols = 500000;
    std::uint64_t seed = 1;
    int jobs = 0;  // worker threads; <= 0 means hardware concurrency
};

struct BerPoint {
    double rop_dbm = 0.0;
    double ber = 0.0;
    std::size_t n_bits = 0;
    std::size_t n_errors = 0;
    bool unreliable = false;  // fewer than 10 counted errors
};

struct BerCurve {
    std::string label;
    std::vector<BerPoint> points;  // ordered by increasing ROP
};

struct NoCrossingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SensitivityEntry {
    std::string label;
    std::optional<double> sensitivity_dbm;
    std::string error;  // set when the curve never crosses the threshold
};

struct SensitivityDelta {
    std::string label_a;
    std::string label_b;
    double delta_db = 0.0;  // positive: B reaches the threshold at lower power
};

struct SensitivityReport {
    double threshold_ber = 3.8e-3;
    std::vector<SensitivityEntry> entries;
    std::vector<SensitivityDelta> deltas;
};

// Transmit-side half of the pipeline: symbols -> RRC pulse shaping ->
// AWG-rate resampling -> full-scale normalization -> DAC quantization.
// Exposed separately so loopback tests can reuse it.
struct TxArtifacts {
    txdsp::SymbolSequence symbols;
    Waveform drive;  // at the AWG rate, quantized
};
TxArtifacts build_tx(const ScenarioSpec& scenario, std::size_t n_symbols,
                     std::uint64_t seed);

// One ROP point: tx -> channel -> full receiver DSP -> BER.
BerPoint run_single_point(const ScenarioSpec& scenario,
                          const channel::LinkConfig& link, double rop_dbm,
                          std::size_t n_symbols, std::uint64_t point_seed);

// ROP sweep; points run in parallel (bounded by spec.jobs) with
// per-point sub-seeds and are merged in index order, so the result is
// independent of scheduling. Stage errors are annotated with the ROP.
BerCurve run_sweep(const ScenarioSpec& scenario,
                   const channel::LinkConfig& link, const SweepSpec& spec);

// ROP at which the curve crosses the BER threshold: linear
// interpolation of log10(BER) against ROP between the bracketing pair.
// Never extrapolates; throws NoCrossingError instead.
double sensitivity(const BerCurve& curve, double threshold_ber);

// Receiver-sensitivity difference in dB; positive when B reaches the
// threshold at lower power (B better). compare(a,b) == -compare(b,a).
double compare(double sensitivity_a_dbm, double sensitivity_b_dbm);

// Writes one CSV per curve (rop_dbm, ber, n_bits, n_errors,
// unreliable), a summary CSV (label, sensitivity_dbm) and a
// self-contained SVG of log10(BER) vs ROP with the FEC threshold
// line. Output bytes are a pure function of the inputs.
void emit_results(const std::vector<BerCurve>& curves,
                  const SensitivityReport& report,
                  const std::string& out_dir);

// "curve-<sanitized label>.csv"
std::string curve_filename(const std::string& label);

}  // namespace imdd::experiment
