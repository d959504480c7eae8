#pragma once

// Multi-scale residual vector quantization.
//
// Level i average-pools the running residual by its stride W_i, projects
// each pooled frame into the codeword space, snaps it to the nearest
// codeword, projects back, nearest-neighbor upsamples by W_i and subtracts
// the result from the residual. Coarse levels therefore emit T / W_i tokens
// and capture slowly varying structure; the W_i = 1 levels refine it at the
// full latent rate. With every stride equal to 1 this is plain RVQ.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mscodec/frame_tensor.hpp"
#include "mscodec/kernels.hpp"

namespace mscodec {

using Token = std::uint32_t;

struct LevelConfig {
  std::size_t stride = 1;
  std::size_t codebook_size = 4096;
  std::size_t codeword_dim = 8;
};

/// K x D codeword table plus the C -> D and D -> C maps around it.
struct Codebook {
  FrameTensor entries;  // codebook_size frames of codeword_dim channels
  Linear in_proj;       // C -> D
  Linear out_proj;      // D -> C
  bool normalize = false;  // compare L2-normalized vectors when set

  std::size_t size() const { return entries.frames(); }
  std::size_t dim() const { return entries.channels(); }
  std::size_t latent_dim() const { return in_proj.in_features; }

  /// Codebook whose projections are identities (requires C == D).
  static Codebook with_identity_projections(FrameTensor entries);
  void validate() const;
};

struct QuantizerLevel {
  LevelConfig config;
  Codebook codebook;
};

/// Per-level token sequences, coarsest level first.
struct MultiScaleCodes {
  std::vector<std::vector<Token>> levels;

  std::size_t total_tokens() const;
  friend bool operator==(const MultiScaleCodes&, const MultiScaleCodes&) = default;
};

struct QuantizeResult {
  MultiScaleCodes codes;
  FrameTensor z_hat;
  FrameTensor residual;
};

/// Index of the nearest codeword by squared Euclidean distance; ties go to
/// the lowest index.
Token lookup_nearest(std::span<const float> v, const Codebook& codebook);

QuantizeResult quantize(const FrameTensor& z, std::span<const QuantizerLevel> levels);

/// Contribution of a single level: upsample(out_proj(entries[tokens]), W).
FrameTensor dequantize_level(std::span<const Token> tokens, const QuantizerLevel& level);

FrameTensor dequantize(const MultiScaleCodes& codes, std::span<const QuantizerLevel> levels);

/// Latent frame count implied by `codes`, after checking that every level
/// length times its stride agrees.
std::size_t latent_frames(const MultiScaleCodes& codes, std::span<const QuantizerLevel> levels);

struct LevelUsage {
  std::vector<std::size_t> counts;  // one bin per codeword
  double entropy = 0.0;             // Shannon entropy / log(K), in [0, 1]
};

std::vector<LevelUsage> codebook_usage(const MultiScaleCodes& codes,
                                       std::span<const QuantizerLevel> levels);

std::size_t lcm_of_strides(std::span<const QuantizerLevel> levels);

}  // namespace mscodec
