#include "imdd/txdsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "imdd/diag.hpp"
#include "imdd/fft.hpp"
#include "imdd/rng.hpp"

namespace imdd::txdsp {

namespace {

// Fibonacci LFSR feedback: x^L + x^k + 1.
int prbs_second_tap(int register_len) {
    switch (register_len) {
        case 7: return 6;
        case 9: return 5;
        case 11: return 9;
        case 15: return 14;
        case 23: return 18;
        case 31: return 28;
        default:
            throw std::invalid_argument("unsupported PRBS register length");
    }
}

std::uint32_t gray_encode(std::uint32_t x) { return x ^ (x >> 1); }

std::uint32_t gray_decode(std::uint32_t x) {
    for (std::uint32_t shift = 1; shift < 32; shift <<= 1) {
        x ^= x >> shift;
    }
    return x;
}

double bessel_i0(double x) {
    // Power series; converges quickly for the Kaiser beta range used here.
    double sum = 1.0, term = 1.0;
    const double q = 0.25 * x * x;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Best rational approximation p/q of ratio with q <= max_den
// (continued fractions).
void rational_approx(double ratio, std::int64_t max_den, std::int64_t& p,
                     std::int64_t& q) {
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double x = ratio;
    for (int i = 0; i < 64; ++i) {
        const double a_f = std::floor(x);
        const auto a = static_cast<std::int64_t>(a_f);
        const std::int64_t p2 = a * p1 + p0;
        const std::int64_t q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        const double frac = x - a_f;
        if (frac < 1e-12) break;
        x = 1.0 / frac;
    }
    p = p1;
    q = q1;
}

}  // namespace

BitVector prbs(int register_len, std::uint64_t seed, std::size_t n_bits) {
    const int tap2 = prbs_second_tap(register_len);
    const std::uint64_t mask = (1ull << register_len) - 1;
    std::uint64_t state = seed & mask;
    if (state == 0) {
        throw std::invalid_argument("PRBS seed must be nonzero in the register");
    }
    BitVector bits(n_bits);
    for (std::size_t i = 0; i < n_bits; ++i) {
        const std::uint64_t fb =
            ((state >> (register_len - 1)) ^ (state >> (tap2 - 1))) & 1ull;
        state = ((state << 1) | fb) & mask;
        bits[i] = static_cast<std::uint8_t>(fb);
    }
    return bits;
}

std::uint32_t label_of_index(std::uint32_t index, int m_bits, Labeling lab) {
    const std::uint32_t mask = (1u << m_bits) - 1;
    return lab == Labeling::Gray ? (gray_encode(index) & mask) : (index & mask);
}

std::uint32_t index_of_label(std::uint32_t word, int m_bits, Labeling lab) {
    const std::uint32_t mask = (1u << m_bits) - 1;
    return lab == Labeling::Gray ? (gray_decode(word) & mask) : (word & mask);
}

SymbolSequence map_uniform_pam8(const BitVector& bits,
                                const shaping::LevelAlphabet& alphabet,
                                Labeling lab) {
    alphabet.validate();
    const int m = static_cast<int>(std::lround(std::log2(alphabet.size())));
    if ((1u << m) != alphabet.size()) {
        throw std::invalid_argument("alphabet size must be a power of two");
    }
    if (bits.size() % static_cast<std::size_t>(m) != 0) {
        throw std::invalid_argument("bit count not divisible by bits per symbol");
    }
    SymbolSequence seq;
    seq.alphabet = alphabet;
    seq.source_bits = bits;
    seq.indices.resize(bits.size() / m);
    for (std::size_t s = 0; s < seq.indices.size(); ++s) {
        std::uint32_t word = 0;
        for (int b = 0; b < m; ++b) {
            word = (word << 1) | bits[s * m + b];
        }
        seq.indices[s] = static_cast<std::uint8_t>(index_of_label(word, m, lab));
    }
    return seq;
}

SymbolSequence sample_shaped_symbols(const shaping::ShapedDistribution& dist,
                                     std::size_t n, std::uint64_t seed) {
    dist.validate();
    if (n == 0) {
        throw std::invalid_argument("symbol count must be positive");
    }
    std::vector<double> cdf(dist.probs.size());
    std::partial_sum(dist.probs.begin(), dist.probs.end(), cdf.begin());
    cdf.back() = 1.0;

    RandomStream rng(seed);
    SymbolSequence seq;
    seq.alphabet = dist.alphabet;
    seq.seed = seed;
    seq.indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        seq.indices[i] = static_cast<std::uint8_t>(
            std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1));
    }
    return seq;
}

BitVector demap_bits(const std::vector<std::uint8_t>& indices, int m_bits,
                     Labeling lab) {
    BitVector bits(indices.size() * m_bits);
    for (std::size_t s = 0; s < indices.size(); ++s) {
        const std::uint32_t word = label_of_index(indices[s], m_bits, lab);
        for (int b = 0; b < m_bits; ++b) {
            bits[s * m_bits + b] =
                static_cast<std::uint8_t>((word >> (m_bits - 1 - b)) & 1u);
        }
    }
    return bits;
}

std::vector<double> rrc_taps(double rolloff, int span, int sps) {
    if (!(rolloff > 0.0) || rolloff > 1.0) {
        throw std::invalid_argument("rolloff must be in (0, 1]");
    }
    if (span <= 0 || span % 2 != 0) {
        throw std::invalid_argument("span must be a positive even symbol count");
    }
    if (sps < 2) {
        throw std::invalid_argument("sps must be >= 2");
    }
    const int ntaps = span * sps + 1;
    const int center = ntaps / 2;
    const double b = rolloff;
    std::vector<double> taps(ntaps);
    for (int k = 0; k < ntaps; ++k) {
        const double t = static_cast<double>(k - center) / sps;  // symbols
        double h;
        if (std::abs(t) < 1e-12) {
            h = 1.0 - b + 4.0 * b / M_PI;
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
            const double c = M_PI / (4.0 * b);
            h = (b / std::sqrt(2.0)) *
                ((1.0 + 2.0 / M_PI) * std::sin(c) + (1.0 - 2.0 / M_PI) * std::cos(c));
        } else {
            const double num = std::sin(M_PI * t * (1.0 - b)) +
                               4.0 * b * t * std::cos(M_PI * t * (1.0 + b));
            const double den = M_PI * t * (1.0 - 16.0 * b * b * t * t);
            h = num / den;
        }
        taps[k] = h;
    }
    double energy = 0.0;
    for (double h : taps) energy += h * h;
    const double norm = 1.0 / std::sqrt(energy);
    for (double& h : taps) h *= norm;
    return taps;
}

Waveform pulse_shape(const SymbolSequence& seq, const std::vector<double>& taps,
                     int sps, const AffineMap& scale, double baud) {
    if (sps < 2) {
        throw std::invalid_argument("sps must be >= 2");
    }
    if (!(baud > 0.0)) {
        throw std::invalid_argument("baud must be positive");
    }
    const std::size_t n = seq.indices.size();
    const std::size_t nt = taps.size();
    Waveform wf;
    wf.sample_rate = baud * sps;
    wf.samples.assign(n * sps + nt - 1, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const double a = scale(seq.alphabet.levels[seq.indices[s]]);
        if (a == 0.0) continue;
        double* out = wf.samples.data() + s * sps;
        for (std::size_t k = 0; k < nt; ++k) {
            out[k] += a * taps[k];
        }
    }
    return wf;
}

double occupied_bandwidth(const Waveform& wf) {
    const std::size_t n = wf.samples.size();
    if (n < 16) return 0.0;
    const std::size_t seg = std::min<std::size_t>(8192, n);
    const std::size_t hop = seg / 2;

    std::vector<double> psd(seg / 2 + 1, 0.0);
    std::vector<std::complex<double>> buf(seg);
    std::size_t n_segs = 0;
    for (std::size_t start = 0; start + seg <= n; start += hop) {
        for (std::size_t i = 0; i < seg; ++i) {
            const double w =
                0.5 - 0.5 * std::cos(2.0 * M_PI * i / (seg - 1));  // Hann
            buf[i] = wf.samples[start + i] * w;
        }
        const auto spec = fft::forward(buf);
        for (std::size_t k = 0; k <= seg / 2; ++k) {
            psd[k] += std::norm(spec[k]);
        }
        ++n_segs;
        if (n_segs >= 64) break;
    }
    if (n_segs == 0) return 0.0;

    const double peak = *std::max_element(psd.begin(), psd.end());
    if (peak <= 0.0) return 0.0;
    const double floor_level = peak * 1e-4;  // -40 dB
    std::size_t edge = 0;
    for (std::size_t k = 0; k < psd.size(); ++k) {
        if (psd[k] >= floor_level) edge = k;
    }
    return static_cast<double>(edge) * wf.sample_rate / static_cast<double>(seg);
}

Waveform resample(const Waveform& wf, double target_rate) {
    if (!(target_rate > 0.0)) {
        throw std::invalid_argument("target rate must be positive");
    }
    if (wf.samples.empty() || target_rate == wf.sample_rate) {
        Waveform out = wf;
        out.sample_rate = target_rate;
        return out;
    }

    const double occ = occupied_bandwidth(wf);
    if (occ > 0.5 * target_rate * (1.0 + 1e-9)) {
        std::ostringstream msg;
        msg << "resample: occupied band " << occ / 1e9 << " GHz exceeds target Nyquist "
            << 0.5 * target_rate / 1e9 << " GHz; band above Nyquist is cut";
        diag::warn(msg.str());
    }

    std::int64_t up = 0, down = 0;
    rational_approx(target_rate / wf.sample_rate, 8192, up, down);
    if (up <= 0 || down <= 0) {
        throw std::invalid_argument("cannot approximate resampling ratio");
    }
    const double ratio_err =
        std::abs(static_cast<double>(up) / down - target_rate / wf.sample_rate) /
        (target_rate / wf.sample_rate);
    if (ratio_err > 1e-6) {
        std::ostringstream msg;
        msg << "resample: rational approximation error " << ratio_err;
        diag::warn(msg.str());
    }

    // Kaiser-windowed sinc prototype at the upsampled rate.
    const double hi_rate = wf.sample_rate * static_cast<double>(up);
    const double min_rate = std::min(wf.sample_rate, target_rate);
    const double f_stop = 0.5 * min_rate;
    const double trans = 0.06 * f_stop;
    const double fc = f_stop - 0.5 * trans;
    const double atten_db = 80.0;
    const double beta = 0.1102 * (atten_db - 8.7);
    std::int64_t ntaps = static_cast<std::int64_t>(
        std::ceil((atten_db - 8.0) / (2.285 * 2.0 * M_PI * trans / hi_rate)));
    if (ntaps % 2 == 0) ++ntaps;
    const std::int64_t half = ntaps / 2;

    std::vector<double> h(ntaps);
    const double i0b = bessel_i0(beta);
    const double fn = fc / hi_rate;
    for (std::int64_t i = 0; i < ntaps; ++i) {
        const double x = static_cast<double>(i - half);
        const double u = 2.0 * fn * x;
        const double sinc = (x == 0.0) ? 1.0 : std::sin(M_PI * u) / (M_PI * u);
        const double r = x / static_cast<double>(half + 1);
        const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[i] = 2.0 * fn * sinc * win;
    }
    // Interpolation gain: zero-stuffing by `up` divides amplitudes by up,
    // so the prototype is scaled to a DC gain of `up`.
    double dc = 0.0;
    for (double v : h) dc += v;
    const double gain = static_cast<double>(up) / dc;
    for (double& v : h) v *= gain;

    const std::size_t n_in = wf.samples.size();
    const auto n_out = static_cast<std::size_t>(
        (static_cast<std::int64_t>(n_in) * up + down - 1) / down);
    Waveform out;
    out.sample_rate = wf.sample_rate * static_cast<double>(up) / down;
    out.samples.assign(n_out, 0.0);

    for (std::size_t nidx = 0; nidx < n_out; ++nidx) {
        const std::int64_t j = static_cast<std::int64_t>(nidx) * down + half;
        std::int64_t base = j / up;
        std::int64_t phase = j % up;
        double acc = 0.0;
        for (std::int64_t tap = phase; tap < ntaps; tap += up, --base) {
            if (base < 0) break;
            if (base < static_cast<std::int64_t>(n_in)) {
                acc += h[tap] * wf.samples[base];
            }
        }
        out.samples[nidx] = acc;
    }
    return out;
}

Waveform dac_quantize(const Waveform& wf, int bits) {
    if (bits == 0) {
        return wf;  // quantization disabled
    }
    if (bits < 1 || bits > 16) {
        throw std::invalid_argument("quantizer bits must be in [1, 16] (0 = off)");
    }
    const double delta = 2.0 / std::pow(2.0, bits);
    const auto code_max = static_cast<std::int64_t>((1ll << (bits - 1)) - 1);
    const auto code_min = static_cast<std::int64_t>(-(1ll << (bits - 1)));
    Waveform out;
    out.sample_rate = wf.sample_rate;
    out.samples.resize(wf.samples.size());
    for (std::size_t i = 0; i < wf.samples.size(); ++i) {
        auto code = static_cast<std::int64_t>(std::floor(wf.samples[i] / delta));
        code = std::clamp(code, code_min, code_max);
        out.samples[i] = (static_cast<double>(code) + 0.5) * delta;
    }
    return out;
}

}  // namespace imdd::txdsp
