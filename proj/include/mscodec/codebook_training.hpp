#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mscodec/frame_tensor.hpp"
#include "mscodec/msrvq.hpp"

namespace mscodec {

struct TrainingOptions {
  std::size_t iterations = 50;
  double ema_decay = 0.99;
  // A codeword assigned fewer than this many frames in an iteration is
  // re-seeded from a random training frame.
  double dead_code_threshold = 2.0;
  std::uint64_t rng_seed = 0;
  bool normalize = false;
};

struct LevelTrainingReport {
  std::vector<double> mse;  // codeword-space quantization MSE, one entry per iteration
  double final_mse = 0.0;
  double residual_energy_before = 0.0;  // mean squared L2 norm per latent frame
  double residual_energy_after = 0.0;
  std::size_t dead_code_resets = 0;
  double usage_entropy = 0.0;
};

struct TrainingResult {
  std::vector<QuantizerLevel> levels;
  std::vector<LevelTrainingReport> reports;
  std::vector<std::string> warnings;
};

/// Greedy level-by-level EMA k-means over the multi-scale residual cascade.
///
/// Each level pools the residual left by the levels before it, fits its
/// projections (identity when D == C, principal axes of the pooled residual
/// when D < C), seeds the codebook with k-means++ and then runs
/// `iterations` full passes of exponential-moving-average centroid updates.
/// The trained level is applied before moving on, so later levels see the
/// same residual that `quantize` would hand them.
///
/// Frames beyond the largest multiple of lcm(strides) are dropped (with a
/// warning). Deterministic for a given `rng_seed`.
TrainingResult train_codebooks_ema(const FrameTensor& features, std::span<const LevelConfig> levels,
                                   const TrainingOptions& opts);

}  // namespace mscodec
