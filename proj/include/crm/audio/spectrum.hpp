#pragma once

#include <complex>
#include <span>
#include <vector>

namespace crm::audio {

/// Forward real FFT of arbitrary length n; returns n/2 + 1 bins, unnormalized.
[[nodiscard]] std::vector<std::complex<double>> real_fft(std::span<const double> input);

/// Inverse of real_fft for an output of length n; scaled so that
/// inverse_real_fft(real_fft(x), x.size()) == x.
[[nodiscard]] std::vector<double> inverse_real_fft(std::span<const std::complex<double>> bins,
                                                   std::size_t n);

/// Periodic Hann window of length n.
[[nodiscard]] std::vector<double> hann_window(std::size_t n);

}  // namespace crm::audio
