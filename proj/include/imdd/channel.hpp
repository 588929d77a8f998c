#pragma once

#include <cstdint>
#include <vector>

#include "imdd/rng.hpp"
#include "imdd/waveform.hpp"

namespace imdd::channel {

enum class FilterShape { GaussianLike, BesselLike, Brickwall };

// Zero-phase magnitude lowpass applied in the frequency domain.
// |H(0)| = 1 and |H(f3db)| = 1/sqrt(2). Throws std::invalid_argument
// when f3db_ghz is not below the signal's Nyquist frequency.
Waveform lowpass(const Waveform& wf, double f3db_ghz,
                 FilterShape shape = FilterShape::GaussianLike);
OpticalField lowpass(const OpticalField& field, double f3db_ghz,
                     FilterShape shape = FilterShape::GaussianLike);

struct EmlConfig {
    double bias = 0.0;          // added to the normalized drive
    double extinction_db = 6.0; // <= 0 means ideal (infinite) extinction
    double clip_lo = -1.0;      // drive clip points
    double clip_hi = 1.0;
    // Optional memoryless polynomial applied to the clipped drive,
    // c0 + c1*d + c2*d^2 + ...; empty = linear.
    std::vector<double> polynomial;
};

struct FiberConfig {
    double length_km = 0.0;
    double dispersion_ps_nm_km = 2.0;  // O-band default, configurable
    double wavelength_nm = 1310.0;
};

struct SoaConfig {
    double gain_db = 15.0;
    double nf_db = 7.0;   // noise figure; ASE only exists for gain > 0 dB
    bool ase = true;      // false = noiseless amplifier
};

struct PdConfig {
    double responsivity_a_w = 0.5;
    double thermal_noise_pa_hz = 20.0;  // one-sided density, pA/sqrt(Hz); 0 = off
    double bw_ghz = 70.0;
};

struct EaConfig {
    double gain_db = 11.0;
    double bw_ghz = 70.0;
};

struct DsoConfig {
    double rate_gsa = 256.0;
    double bw_ghz = 113.0;
    int bits = 8;  // 0 disables quantization
};

// Parametric behavioral model of the optical IM/DD path:
// driver/EML, fiber, VOA, SOA + optical filter, PIN PD, electrical
// amplifier, DSO front-end. Bandwidths of 0 disable the corresponding
// filter stage.
struct LinkConfig {
    double awg_bw_ghz = 25.0;
    double tosa_bw_ghz = 40.0;
    EmlConfig eml;
    double tx_power_dbm = -3.8;
    FiberConfig fiber;
    SoaConfig soa;
    double optical_filter_nm = 2.0;  // 0 = no filter
    PdConfig pd;
    EaConfig ea;
    DsoConfig dso;
    std::uint64_t seed = 1;

    void validate() const;

    // Convenience for loopback testing: switches off ASE, thermal
    // noise, quantization, every filter, fiber and EML nonidealities.
    void make_transparent();
};

// Drive in [-1, 1] to optical power by the EML affine law: the
// midpoint drive maps to tx_power_dbm and the extremes are set by the
// extinction ratio. Envelope is sqrt(power), chirp-free.
OpticalField eml_modulate(const Waveform& drive, const EmlConfig& eml,
                          double tx_power_dbm, double wavelength_nm);

// All-pass chromatic dispersion: phase exp(j*(beta2/2)*w^2*L) with
// beta2 = -D*lambda^2/(2*pi*c). Energy-preserving.
OpticalField fiber_propagate(const OpticalField& field, double length_km,
                             double dispersion_ps_nm_km);

// VOA: rescales the field so mean power equals the target ROP.
// Throws std::invalid_argument on a zero-power input.
OpticalField attenuate_to_rop(const OpticalField& field, double rop_dbm);

// SOA: envelope * sqrt(G) plus circular complex white ASE with
// single-polarization PSD (G-1)*n_sp*h*nu, n_sp = NF*G/(2*(G-1)),
// followed by an optical bandpass of the given width (nm, converted
// at the carrier). rng == nullptr disables ASE.
OpticalField soa_amplify(const OpticalField& field, double gain_db,
                         double nf_db, double filter_nm, RandomStream* rng);

// Square-law detection: i = R*|e|^2 (mA for mW fields) plus white
// thermal noise of the configured one-sided density. Signal-spontaneous
// and spontaneous-spontaneous beat noise arise from the ASE field
// itself. rng == nullptr disables thermal noise.
Waveform photodetect(const OpticalField& field, double responsivity_a_w,
                     double thermal_noise_pa_hz, RandomStream* rng);

// DSO front-end: lowpass at bw_ghz, resample to rate_gsa, mid-rise
// quantization over an auto-ranged full scale (max |sample|).
Waveform adc_capture(const Waveform& wf, double rate_gsa, int bits,
                     double bw_ghz);

// Full chain: AWG/TOSA filtering, EML, fiber, VOA to the requested
// ROP, SOA + optical filter, PD, EA, DSO capture. Deterministic given
// cfg.seed. The analog path runs at max(input rate, DSO rate).
Waveform run_link(const Waveform& tx, const LinkConfig& cfg, double rop_dbm);

}  // namespace imdd::channel
