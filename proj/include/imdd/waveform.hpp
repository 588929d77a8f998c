#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace imdd {

// y = scale * x + offset
struct AffineMap {
    double scale = 1.0;
    double offset = 0.0;

    double operator()(double x) const { return scale * x + offset; }
};

// Sampled real electrical signal.
struct Waveform {
    std::vector<double> samples;
    double sample_rate = 0.0;  // Hz

    std::size_t size() const { return samples.size(); }
    double duration() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }

    double mean() const;
    double power() const;  // mean square
    double peak() const;   // max |x|

    // Throws std::invalid_argument on non-finite samples or rate <= 0.
    void validate() const;
};

// Complex optical baseband envelope in sqrt(mW):
// mean |e|^2 equals optical power in mW.
struct OpticalField {
    std::vector<std::complex<double>> envelope;
    double sample_rate = 0.0;   // Hz
    double wavelength_nm = 1310.0;

    std::size_t size() const { return envelope.size(); }
    double mean_power_mw() const;
    double energy() const;  // sum |e|^2

    void validate() const;
};

// Scales all samples so that max |x| = 1. No-op on an all-zero signal.
Waveform normalize_full_scale(const Waveform& wf);

// Debug dump: <base>.f32 holds little-endian float32 samples,
// <base>.txt the sidecar header (sample_rate, length).
void write_raw(const Waveform& wf, const std::string& base_path);
Waveform read_raw(const std::string& base_path);

}  // namespace imdd
