#include "imdd/waveform.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace imdd {

double Waveform::mean() const {
    double s = 0.0;
    for (double x : samples) s += x;
    return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
}

double Waveform::power() const {
    double s = 0.0;
    for (double x : samples) s += x * x;
    return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
}

double Waveform::peak() const {
    double p = 0.0;
    for (double x : samples) p = std::max(p, std::abs(x));
    return p;
}

void Waveform::validate() const {
    if (!(sample_rate > 0.0)) {
        throw std::invalid_argument("waveform sample rate must be positive");
    }
    for (double x : samples) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("waveform contains non-finite sample");
        }
    }
}

double OpticalField::mean_power_mw() const {
    if (envelope.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : envelope) s += std::norm(e);
    return s / static_cast<double>(envelope.size());
}

double OpticalField::energy() const {
    double s = 0.0;
    for (const auto& e : envelope) s += std::norm(e);
    return s;
}

void OpticalField::validate() const {
    if (!(sample_rate > 0.0)) {
        throw std::invalid_argument("field sample rate must be positive");
    }
    for (const auto& e : envelope) {
        if (!std::isfinite(e.real()) || !std::isfinite(e.imag())) {
            throw std::invalid_argument("field contains non-finite sample");
        }
    }
}

Waveform normalize_full_scale(const Waveform& wf) {
    Waveform out = wf;
    const double p = wf.peak();
    if (p > 0.0) {
        for (double& x : out.samples) x /= p;
    }
    return out;
}

void write_raw(const Waveform& wf, const std::string& base_path) {
    // Host is assumed little-endian (x86/aarch64); float bytes are
    // written as stored.
    std::ofstream bin(base_path + ".f32", std::ios::binary);
    if (!bin) {
        throw std::runtime_error("cannot open " + base_path + ".f32 for writing");
    }
    for (double x : wf.samples) {
        const float f = static_cast<float>(x);
        bin.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
    bin.close();
    std::ofstream hdr(base_path + ".txt");
    if (!hdr) {
        throw std::runtime_error("cannot open " + base_path + ".txt for writing");
    }
    hdr << "sample_rate_hz=" << std::scientific << wf.sample_rate << "\n";
    hdr << "length=" << wf.samples.size() << "\n";
}

Waveform read_raw(const std::string& base_path) {
    std::ifstream hdr(base_path + ".txt");
    if (!hdr) {
        throw std::runtime_error("cannot open " + base_path + ".txt");
    }
    Waveform wf;
    std::size_t length = 0;
    std::string line;
    while (std::getline(hdr, line)) {
        if (line.rfind("sample_rate_hz=", 0) == 0) {
            wf.sample_rate = std::stod(line.substr(15));
        } else if (line.rfind("length=", 0) == 0) {
            length = std::stoull(line.substr(7));
        }
    }
    std::ifstream bin(base_path + ".f32", std::ios::binary);
    if (!bin) {
        throw std::runtime_error("cannot open " + base_path + ".f32");
    }
    wf.samples.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
        float f = 0.0f;
        bin.read(reinterpret_cast<char*>(&f), sizeof(f));
        if (!bin) {
            throw std::runtime_error("raw file shorter than header length");
        }
        wf.samples[i] = static_cast<double>(f);
    }
    return wf;
}

}  // namespace imdd
