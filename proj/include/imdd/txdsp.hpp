#pragma once

#include <cstdint>
#include <vector>

#include "imdd/shaping.hpp"
#include "imdd/waveform.hpp"

namespace imdd::txdsp {

using BitVector = std::vector<std::uint8_t>;

// Maximal-length LFSR bit stream (PRBS-L). Supported register lengths:
// 7, 9, 11, 15, 23, 31 with the standard x^L + x^k + 1 polynomials.
// Throws std::invalid_argument for unsupported lengths or seed = 0
// (all-zero lock state).
BitVector prbs(int register_len, std::uint64_t seed, std::size_t n_bits);

enum class Labeling { Gray, Natural };

// Bits carried by level index i under the labeling (MSB first).
std::uint32_t label_of_index(std::uint32_t index, int m_bits, Labeling lab);
// Level index whose label equals the bit word (MSB first).
std::uint32_t index_of_label(std::uint32_t word, int m_bits, Labeling lab);

// Symbol stream on a PAM alphabet. source_bits holds the originating
// bit stream for mapped (uniform) sequences and stays empty for
// randomly sampled shaped sequences.
struct SymbolSequence {
    std::vector<std::uint8_t> indices;
    shaping::LevelAlphabet alphabet;
    BitVector source_bits;
    std::uint64_t seed = 0;
};

// Groups consecutive m-bit words into PAM levels (default m = 3,
// PAM-8). Throws std::invalid_argument if |bits| is not divisible by
// the word size.
SymbolSequence map_uniform_pam8(const BitVector& bits,
                                const shaping::LevelAlphabet& alphabet,
                                Labeling lab = Labeling::Gray);

// i.i.d. draws from the shaped distribution via inverse CDF on a
// seeded stream. Identical (dist, n, seed) give identical output.
SymbolSequence sample_shaped_symbols(const shaping::ShapedDistribution& dist,
                                     std::size_t n, std::uint64_t seed);

// Demaps a symbol sequence to its bit labels (m bits per symbol).
BitVector demap_bits(const std::vector<std::uint8_t>& indices, int m_bits,
                     Labeling lab);

// Unit-energy root-raised-cosine taps: odd length span*sps + 1,
// symmetric, with the t = 0 and t = +-T/(4*beta) points evaluated by
// their analytic limits. span is in symbols and must be even; sps >= 2.
std::vector<double> rrc_taps(double rolloff, int span, int sps);

// Zero-stuffed upsampling by sps followed by full FIR convolution.
// Symbol amplitudes pass through `scale` first. Output length is
// n*sps + |taps| - 1 at sample rate sps*baud.
Waveform pulse_shape(const SymbolSequence& seq, const std::vector<double>& taps,
                     int sps, const AffineMap& scale, double baud);

// Highest frequency (Hz) whose Welch PSD stays within 40 dB of the
// peak; used for the resampler's aliasing check.
double occupied_bandwidth(const Waveform& wf);

// Band-limited rational (polyphase) resampling to target_rate.
// Emits a diag warning when the occupied band exceeds the target
// Nyquist frequency; the aliased sliver is removed by the anti-alias
// filter rather than folded. Duration is preserved within one output
// sample. target == source returns the input unchanged.
Waveform resample(const Waveform& wf, double target_rate);

// Mid-rise uniform quantizer over [-1, 1]; out-of-range input clips to
// the extreme codes. bits in [1, 16]; bits = 0 disables quantization.
Waveform dac_quantize(const Waveform& wf, int bits);

}  // namespace imdd::txdsp
