#pragma once

#include <cstddef>
#include <vector>

#include "mscodec/codec.hpp"

namespace mscodec {

/// Multi-resolution spectrogram settings. Each window uses a periodic Hann
/// window, hop = window / 4 and zero padding of window / 2 at both ends.
struct SpectralConfig {
  std::vector<std::size_t> window_sizes{512, 1024, 2048};
  std::vector<std::size_t> mel_bins{40, 80, 160};  // one count per window
  double f_min = 0.0;
  double f_max = 0.0;  // 0 means Nyquist
  double log_epsilon = 1e-5;

  void validate() const;
};

inline constexpr double kSiSdrCap = 100.0;

/// Scale-invariant SDR in dB, clamped to [-100, +100]. No mean removal.
double si_sdr(const AudioBuffer& reference, const AudioBuffer& estimate);

/// Mean over windows of the mean |log10(mel(ref) + eps) - log10(mel(est) + eps)|.
/// Mel filters are HTK-scale triangles with unit peak applied to STFT
/// magnitudes.
double mel_l1(const AudioBuffer& reference, const AudioBuffer& estimate,
              const SpectralConfig& cfg = {});

/// Same as mel_l1 on linear-frequency STFT magnitudes.
double stft_l1(const AudioBuffer& reference, const AudioBuffer& estimate,
               const SpectralConfig& cfg = {});

/// |STFT| frames x (window / 2 + 1), row-major.
std::vector<double> stft_magnitude(const std::vector<float>& signal, std::size_t window);

/// mel_bins x (window / 2 + 1) triangular filterbank, row-major.
std::vector<double> mel_filterbank(std::size_t mel_bins, std::size_t window, double sample_rate,
                                   double f_min, double f_max);

}  // namespace mscodec
