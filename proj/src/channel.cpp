#include "imdd/channel.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "imdd/fft.hpp"
#include "imdd/txdsp.hpp"

namespace imdd::channel {

namespace {

constexpr double kLightSpeed = 299792458.0;   // m/s
constexpr double kPlanck = 6.62607015e-34;    // J*s

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double filter_magnitude(double f, double f3db, FilterShape shape) {
    const double x = std::abs(f) / f3db;
    switch (shape) {
        case FilterShape::GaussianLike:
            return std::exp(-0.5 * M_LN2 * x * x);
        case FilterShape::BesselLike: {
            // 4th-order Bessel magnitude; normalized -3 dB at w = 2.1139.
            const double w = 2.1139 * x;
            const double w2 = w * w;
            const double re = w2 * w2 - 45.0 * w2 + 105.0;
            const double im = -10.0 * w2 * w + 105.0 * w;
            return 105.0 / std::sqrt(re * re + im * im);
        }
        case FilterShape::Brickwall:
            if (x < 1.0) return 1.0;
            if (x == 1.0) return M_SQRT1_2;
            return 0.0;
    }
    return 1.0;
}

template <typename ApplyFn>
void apply_freq_filter(std::vector<std::complex<double>>& samples,
                       double sample_rate, ApplyFn&& weight) {
    auto spec = fft::forward(samples);
    const std::size_t n = spec.size();
    for (std::size_t k = 0; k < n; ++k) {
        spec[k] *= weight(fft::bin_frequency(k, n, sample_rate));
    }
    samples = fft::inverse(spec);
}

void check_f3db(double f3db_hz, double sample_rate) {
    if (!(f3db_hz > 0.0)) {
        throw std::invalid_argument("lowpass f3db must be positive");
    }
    if (f3db_hz >= 0.5 * sample_rate) {
        throw std::invalid_argument("lowpass f3db must be below Nyquist");
    }
}

}  // namespace

Waveform lowpass(const Waveform& wf, double f3db_ghz, FilterShape shape) {
    const double f3db = f3db_ghz * 1e9;
    check_f3db(f3db, wf.sample_rate);
    std::vector<std::complex<double>> buf(wf.samples.begin(), wf.samples.end());
    apply_freq_filter(buf, wf.sample_rate,
                      [&](double f) { return filter_magnitude(f, f3db, shape); });
    Waveform out;
    out.sample_rate = wf.sample_rate;
    out.samples.resize(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        out.samples[i] = buf[i].real();
    }
    return out;
}

OpticalField lowpass(const OpticalField& field, double f3db_ghz,
                     FilterShape shape) {
    const double f3db = f3db_ghz * 1e9;
    check_f3db(f3db, field.sample_rate);
    OpticalField out = field;
    apply_freq_filter(out.envelope, field.sample_rate,
                      [&](double f) { return filter_magnitude(f, f3db, shape); });
    return out;
}

void LinkConfig::validate() const {
    auto nonneg = [](double v, const char* what) {
        if (v < 0.0) {
            throw std::invalid_argument(std::string(what) + " must be >= 0");
        }
    };
    nonneg(awg_bw_ghz, "awg_bw_ghz");
    nonneg(tosa_bw_ghz, "tosa_bw_ghz");
    nonneg(fiber.length_km, "fiber.length_km");
    nonneg(optical_filter_nm, "optical_filter_nm");
    nonneg(pd.bw_ghz, "pd.bw_ghz");
    nonneg(pd.thermal_noise_pa_hz, "pd.thermal_noise_pa_hz");
    nonneg(ea.bw_ghz, "ea.bw_ghz");
    nonneg(soa.gain_db, "soa.gain_db");
    if (!(dso.rate_gsa > 0.0)) {
        throw std::invalid_argument("dso.rate_gsa must be positive");
    }
    if (!(pd.responsivity_a_w > 0.0)) {
        throw std::invalid_argument("pd.responsivity_a_w must be positive");
    }
    if (soa.gain_db > 0.0 && soa.ase && soa.nf_db < 3.0) {
        throw std::invalid_argument("soa.nf_db must be >= 3 dB for gain > 1");
    }
    if (fiber.wavelength_nm <= 0.0) {
        throw std::invalid_argument("fiber.wavelength_nm must be positive");
    }
}

void LinkConfig::make_transparent() {
    awg_bw_ghz = 0.0;
    tosa_bw_ghz = 0.0;
    eml.extinction_db = 0.0;  // ideal
    eml.bias = 0.0;
    eml.polynomial.clear();
    fiber.length_km = 0.0;
    soa.gain_db = 0.0;
    soa.ase = false;
    optical_filter_nm = 0.0;
    pd.thermal_noise_pa_hz = 0.0;
    pd.bw_ghz = 0.0;
    ea.bw_ghz = 0.0;
    dso.bw_ghz = 0.0;
    dso.bits = 0;
}

OpticalField eml_modulate(const Waveform& drive, const EmlConfig& eml,
                          double tx_power_dbm, double wavelength_nm) {
    const double p_mid = dbm_to_mw(tx_power_dbm);
    double p_lo, p_hi;
    if (eml.extinction_db > 0.0) {
        const double er = db_to_lin(eml.extinction_db);
        p_lo = 2.0 * p_mid / (1.0 + er);
        p_hi = er * p_lo;
    } else {
        p_lo = 0.0;
        p_hi = 2.0 * p_mid;
    }

    OpticalField field;
    field.sample_rate = drive.sample_rate;
    field.wavelength_nm = wavelength_nm;
    field.envelope.resize(drive.samples.size());
    for (std::size_t i = 0; i < drive.samples.size(); ++i) {
        double d = drive.samples[i] + eml.bias;
        d = std::clamp(d, eml.clip_lo, eml.clip_hi);
        if (!eml.polynomial.empty()) {
            double acc = 0.0;
            for (std::size_t c = eml.polynomial.size(); c-- > 0;) {
                acc = acc * d + eml.polynomial[c];
            }
            d = std::clamp(acc, -1.0, 1.0);
        }
        const double p = std::max(0.0, p_lo + 0.5 * (d + 1.0) * (p_hi - p_lo));
        field.envelope[i] = std::sqrt(p);
    }
    return field;
}

OpticalField fiber_propagate(const OpticalField& field, double length_km,
                             double dispersion_ps_nm_km) {
    if (length_km == 0.0 || dispersion_ps_nm_km == 0.0) {
        return field;
    }
    const double lambda = field.wavelength_nm * 1e-9;
    const double d_si = dispersion_ps_nm_km * 1e-6;  // s/m^2
    const double beta2 = -d_si * lambda * lambda / (2.0 * M_PI * kLightSpeed);
    const double len_m = length_km * 1e3;

    OpticalField out = field;
    apply_freq_filter(out.envelope, field.sample_rate, [&](double f) {
        const double w = 2.0 * M_PI * f;
        return std::polar(1.0, 0.5 * beta2 * w * w * len_m);
    });
    return out;
}

OpticalField attenuate_to_rop(const OpticalField& field, double rop_dbm) {
    const double p_in = field.mean_power_mw();
    if (!(p_in > 0.0)) {
        throw std::invalid_argument("attenuate_to_rop: input has zero power");
    }
    const double scale = std::sqrt(dbm_to_mw(rop_dbm) / p_in);
    OpticalField out = field;
    for (auto& e : out.envelope) e *= scale;
    return out;
}

OpticalField soa_amplify(const OpticalField& field, double gain_db,
                         double nf_db, double filter_nm, RandomStream* rng) {
    const double g = db_to_lin(gain_db);
    OpticalField out = field;
    const double amp = std::sqrt(g);
    for (auto& e : out.envelope) e *= amp;

    if (rng != nullptr && g > 1.0) {
        const double nf = db_to_lin(nf_db);
        const double n_sp = nf * g / (2.0 * (g - 1.0));
        const double nu = kLightSpeed / (field.wavelength_nm * 1e-9);
        // Single polarization, PSD in mW/Hz over the simulated band.
        const double psd_mw = (g - 1.0) * n_sp * kPlanck * nu * 1e3;
        const double sigma2 = psd_mw * field.sample_rate;
        const double sigma = std::sqrt(sigma2);
        for (auto& e : out.envelope) {
            e += sigma * rng->complex_gaussian();
        }
    }

    if (filter_nm > 0.0) {
        const double lambda = field.wavelength_nm * 1e-9;
        const double width_hz = kLightSpeed * (filter_nm * 1e-9) / (lambda * lambda);
        if (width_hz < field.sample_rate) {
            // Optical bandpass: brickwall of the given total width.
            const double half = 0.5 * width_hz;
            apply_freq_filter(out.envelope, field.sample_rate, [&](double f) {
                return std::abs(f) <= half ? 1.0 : 0.0;
            });
        }
    }
    return out;
}

Waveform photodetect(const OpticalField& field, double responsivity_a_w,
                     double thermal_noise_pa_hz, RandomStream* rng) {
    Waveform out;
    out.sample_rate = field.sample_rate;
    out.samples.resize(field.envelope.size());
    for (std::size_t i = 0; i < field.envelope.size(); ++i) {
        out.samples[i] = responsivity_a_w * std::norm(field.envelope[i]);  // mA
    }
    if (rng != nullptr && thermal_noise_pa_hz > 0.0) {
        // One-sided density over the simulated bandwidth fs/2, in mA.
        const double sigma =
            thermal_noise_pa_hz * 1e-12 * std::sqrt(0.5 * field.sample_rate) * 1e3;
        for (auto& s : out.samples) {
            s += sigma * rng->gaussian();
        }
    }
    return out;
}

Waveform adc_capture(const Waveform& wf, double rate_gsa, int bits,
                     double bw_ghz) {
    Waveform stage = wf;
    if (bw_ghz > 0.0 && bw_ghz * 1e9 < 0.5 * stage.sample_rate) {
        stage = lowpass(stage, bw_ghz, FilterShape::GaussianLike);
    }
    const double target = rate_gsa * 1e9;
    if (target != stage.sample_rate) {
        stage = txdsp::resample(stage, target);
    }
    if (bits <= 0) {
        return stage;
    }
    const double fs = stage.peak();
    if (fs == 0.0) {
        return stage;
    }
    for (auto& s : stage.samples) s /= fs;
    stage = txdsp::dac_quantize(stage, bits);
    for (auto& s : stage.samples) s *= fs;
    return stage;
}

Waveform run_link(const Waveform& tx, const LinkConfig& cfg, double rop_dbm) {
    cfg.validate();
    tx.validate();

    RandomStream ase_rng(sub_seed(cfg.seed, 11));
    RandomStream thermal_rng(sub_seed(cfg.seed, 12));

    // Analog path runs at the highest rate in play.
    const double analog_rate = std::max(tx.sample_rate, cfg.dso.rate_gsa * 1e9);
    Waveform drive = tx;
    if (analog_rate != drive.sample_rate) {
        drive = txdsp::resample(drive, analog_rate);
    }
    if (cfg.awg_bw_ghz > 0.0) {
        drive = lowpass(drive, cfg.awg_bw_ghz, FilterShape::GaussianLike);
    }
    if (cfg.tosa_bw_ghz > 0.0) {
        drive = lowpass(drive, cfg.tosa_bw_ghz, FilterShape::GaussianLike);
    }

    OpticalField field = eml_modulate(drive, cfg.eml, cfg.tx_power_dbm,
                                      cfg.fiber.wavelength_nm);
    field = fiber_propagate(field, cfg.fiber.length_km,
                            cfg.fiber.dispersion_ps_nm_km);
    field = attenuate_to_rop(field, rop_dbm);
    field = soa_amplify(field, cfg.soa.gain_db, cfg.soa.nf_db,
                        cfg.optical_filter_nm,
                        cfg.soa.ase ? &ase_rng : nullptr);

    Waveform current = photodetect(
        field, cfg.pd.responsivity_a_w, cfg.pd.thermal_noise_pa_hz,
        cfg.pd.thermal_noise_pa_hz > 0.0 ? &thermal_rng : nullptr);
    if (cfg.pd.bw_ghz > 0.0) {
        current = lowpass(current, cfg.pd.bw_ghz, FilterShape::GaussianLike);
    }
    const double ea_gain = std::pow(10.0, cfg.ea.gain_db / 20.0);
    for (auto& s : current.samples) s *= ea_gain;
    if (cfg.ea.bw_ghz > 0.0) {
        current = lowpass(current, cfg.ea.bw_ghz, FilterShape::GaussianLike);
    }
    return adc_capture(current, cfg.dso.rate_gsa, cfg.dso.bits, cfg.dso.bw_ghz);
}

}  // namespace imdd::channel
