#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "imdd/txdsp.hpp"
#include "imdd/waveform.hpp"

namespace imdd::rxdsp {

// Raised when the timing loop fails to converge.
struct TimingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TimingOptions {
    double loop_bandwidth = 2e-3;  // normalized to the symbol rate
    double damping = 0.7071;
    // Detector gain of the Gardner TED on a unit-power beta~0.4 RRC
    // signal; folded into the loop constants.
    double detector_gain = 2.6;
};

struct TimingResult {
    Waveform two_sps;              // exactly 2 samples/symbol, phase-locked
    std::size_t settle_symbols;    // prefix to discard downstream
    double frequency_offset = 0.0; // converged rate correction (fractional)
    std::vector<double> error_history;   // TED output per symbol
    std::vector<double> strobe_positions;  // input-sample position per symbol
};

// Gardner timing recovery: cubic interpolation from the input rate to
// 2 samples/symbol, driven by a proportional+integral loop on the
// Gardner error e[k] = x[k-1/2]*(x[k] - x[k-1]). The input is
// mean-removed and power-normalized before the detector.
// Throws TimingError when the late error variance exceeds twice the
// early one (loop did not converge).
TimingResult timing_recover(const Waveform& wf, double baud,
                            const TimingOptions& opts = {});

// Picks the on-symbol phase of a 2-sps stream: the parity with the
// larger mean |x|^2 over the probe window (ties -> phase 0).
std::vector<double> downsample_to_1sps(const Waveform& two_sps,
                                       std::size_t probe_offset_symbols = 0,
                                       std::size_t probe_symbols = 4096);

// Lag that best aligns obs against ref (obs[i] ~ ref[i + lag]),
// located by FFT cross-correlation of the mean-removed sequences.
std::int64_t align_lag(const std::vector<double>& obs,
                       const std::vector<double>& ref);

// Volterra equalizer with linear/2nd/3rd-order kernels. Memory l1
// for the linear part; the 2nd and 3rd order kernels act on windows
// of length l2 and l3 centered inside the linear window. Coefficient
// layout: [bias, linear (l1), 2nd order upper-triangular pairs,
// 3rd order upper-triangular triples].
struct VolterraModel {
    int l1 = 0, l2 = 0, l3 = 0;
    std::vector<double> w;  // feature_count(l1, l2, l3) entries
    double ridge_lambda = 0.0;  // nonzero if the solve needed regularization
    double training_mse = 0.0;

    static std::size_t feature_count(int l1, int l2, int l3);

    double bias() const { return w.empty() ? 0.0 : w[0]; }
    std::span<const double> linear() const {
        return {w.data() + 1, static_cast<std::size_t>(l1)};
    }
    std::span<const double> second_order() const {
        return {w.data() + 1 + l1, static_cast<std::size_t>(l2) * (l2 + 1) / 2};
    }
    std::span<const double> third_order() const {
        return {w.data() + 1 + l1 + l2 * (l2 + 1) / 2,
                static_cast<std::size_t>(l3) * (l3 + 1) * (l3 + 2) / 6};
    }
};

// Fills `out` (feature_count entries) with
// [1, x_i, x_i*x_j (i<=j, centered l2 window), x_i*x_j*x_k (i<=j<=k,
// centered l3 window)] for a window of l1 recent observations.
void volterra_features(std::span<const double> window, int l2, int l3,
                       std::span<double> out);

enum class TrainMethod { LeastSquares, Lms };

// Data-aided training: minimizes the MSE between the model output and
// the reference amplitudes over the given index range [first, last).
// Least-squares path solves the normal equations (ridge fallback with
// a warning when ill-conditioned); requires at least 10x coefficient
// count of training samples. LMS runs normalized gradient passes.
VolterraModel train_volterra(const std::vector<double>& obs,
                             const std::vector<double>& reference,
                             std::size_t first, std::size_t last,
                             int l1, int l2, int l3,
                             TrainMethod method = TrainMethod::LeastSquares);

struct EqualizedSignal {
    std::vector<double> values;  // same length as the observation stream
    std::size_t edge = 0;        // first/last `edge` symbols are invalid

    std::size_t first_valid() const { return edge; }
    std::size_t last_valid(std::size_t n) const { return n - edge; }
};

EqualizedSignal equalize(const std::vector<double>& obs,
                         const VolterraModel& model);

// MAP decision rule for Gaussian noise around each reconstructed level.
struct DecisionRule {
    std::vector<double> level_means;  // strictly increasing, M entries
    std::vector<double> sigma;        // 1 entry (pooled) or M entries
    std::vector<double> priors;       // M entries
    std::vector<double> thresholds;   // M-1 strictly increasing boundaries
};

// Closed-form MAP boundaries: with pooled sigma,
// t = (mu_a+mu_b)/2 + sigma^2*ln(p_a/p_b)/(mu_b-mu_a); with per-level
// sigmas the Gaussian likelihood crossing inside (mu_a, mu_b).
// Boundaries are clamped to stay strictly increasing (a diag warning
// reports clamping, which only triggers for extreme prior ratios).
DecisionRule map_thresholds(const std::vector<double>& level_means,
                            const std::vector<double>& sigma,
                            const std::vector<double>& priors);

struct Decisions {
    std::vector<std::uint8_t> levels;
    txdsp::BitVector bits;
};

// Threshold decision (binary search; a value exactly on a boundary
// goes to the lower level) followed by label demapping.
Decisions decide_and_demap(std::span<const double> estimates,
                           const DecisionRule& rule, int m_bits,
                           txdsp::Labeling lab = txdsp::Labeling::Gray);

struct BerCount {
    double ber = 0.0;
    std::size_t n_errors = 0;
    std::size_t n_bits = 0;
};

// Hamming distance / length. Throws std::invalid_argument on length
// mismatch.
BerCount count_ber(const txdsp::BitVector& tx_bits,
                   const txdsp::BitVector& rx_bits);

}  // namespace imdd::rxdsp
