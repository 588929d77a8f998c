#pragma once

#include <complex>
#include <vector>

namespace imdd::fft {

// In-order complex DFT/IDFT of arbitrary length (FFTW backend).
// The inverse is normalized by 1/N, so inverse(forward(x)) == x.
// Plans use FFTW_ESTIMATE on aligned buffers, which keeps results
// bit-reproducible run to run. Safe to call from multiple threads.
std::vector<std::complex<double>> forward(
    const std::vector<std::complex<double>>& x);
std::vector<std::complex<double>> inverse(
    const std::vector<std::complex<double>>& x);

// FFT bin center frequency in Hz for bin k of an N-point transform at
// the given sample rate, in the wrapped (two-sided) convention:
// k < N/2 -> k*fs/N, otherwise (k-N)*fs/N.
double bin_frequency(std::size_t k, std::size_t n, double sample_rate);

}  // namespace imdd::fft
