#include "imdd/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace imdd::fft {

namespace {

// FFTW plan creation is not thread-safe; execution on distinct buffers is.
std::mutex g_plan_mutex;

struct FftwBuffer {
    fftw_complex* ptr = nullptr;
    explicit FftwBuffer(std::size_t n) {
        ptr = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        if (!ptr) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

std::vector<std::complex<double>> transform(
    const std::vector<std::complex<double>>& x, int sign) {
    const std::size_t n = x.size();
    if (n == 0) return {};

    FftwBuffer in(n), out(n);
    std::memcpy(in.ptr, x.data(), sizeof(fftw_complex) * n);

    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        plan = fftw_plan_dft_1d(static_cast<int>(n), in.ptr, out.ptr, sign,
                                FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    if (!plan) throw std::runtime_error("fftw plan creation failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        fftw_destroy_plan(plan);
    }

    std::vector<std::complex<double>> y(n);
    std::memcpy(y.data(), out.ptr, sizeof(fftw_complex) * n);
    if (sign == FFTW_BACKWARD) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& v : y) v *= inv;
    }
    return y;
}

}  // namespace

std::vector<std::complex<double>> forward(
    const std::vector<std::complex<double>>& x) {
    return transform(x, FFTW_FORWARD);
}

std::vector<std::complex<double>> inverse(
    const std::vector<std::complex<double>>& x) {
    return transform(x, FFTW_BACKWARD);
}

double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
    const double kk = static_cast<double>(k);
    const double nn = static_cast<double>(n);
    const double f = (kk < nn / 2.0) ? kk : kk - nn;
    return f * sample_rate / nn;
}

}  // namespace imdd::fft
