#pragma once

#include <complex>
#include <vector>

namespace kdvq {

// Unnormalized DFT pair: fft_forward computes sum_j x_j e^{-2 pi i jk/n},
// fft_inverse computes sum_k X_k e^{+2 pi i jk/n} (caller divides by n).
// Backed by FFTW with a mutex-guarded plan cache.
void fft_forward(std::vector<std::complex<double>>& data);
void fft_inverse(std::vector<std::complex<double>>& data);

// Smallest 5-smooth integer >= n (FFT-friendly sizes).
int next_fast_size(int n);

} // namespace kdvq
