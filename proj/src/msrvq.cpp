#include "mscodec/msrvq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mscodec {

Codebook Codebook::with_identity_projections(FrameTensor entries) {
  Codebook cb;
  const std::size_t d = entries.channels();
  cb.entries = std::move(entries);
  cb.in_proj = Linear::identity(d);
  cb.out_proj = Linear::identity(d);
  return cb;
}

void Codebook::validate() const {
  if (entries.frames() == 0 || entries.channels() == 0) {
    throw Error(Errc::invalid_argument, "codebook: K and D must be >= 1");
  }
  in_proj.validate();
  out_proj.validate();
  if (in_proj.out_features != dim() || out_proj.in_features != dim()) {
    throw Error(Errc::shape_mismatch, "codebook: projection dims do not match codeword dim");
  }
  if (in_proj.in_features != out_proj.out_features) {
    throw Error(Errc::shape_mismatch, "codebook: in_proj and out_proj latent dims differ");
  }
}

std::size_t MultiScaleCodes::total_tokens() const {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.size();
  return n;
}

namespace {

double norm_of(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

}  // namespace

Token lookup_nearest(std::span<const float> v, const Codebook& codebook) {
  const std::size_t K = codebook.size();
  const std::size_t D = codebook.dim();
  if (K == 0) throw Error(Errc::invalid_argument, "lookup_nearest: empty codebook");
  if (v.size() != D) {
    throw Error(Errc::shape_mismatch, "lookup_nearest: vector has dim " + std::to_string(v.size()) +
                                          ", codebook has " + std::to_string(D));
  }
  double v_scale = 1.0;
  if (codebook.normalize) {
    const double n = norm_of(v);
    v_scale = n > 0.0 ? 1.0 / n : 1.0;
  }
  Token best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    const auto e = codebook.entries.frame(k);
    double e_scale = 1.0;
    if (codebook.normalize) {
      const double n = norm_of(e);
      e_scale = n > 0.0 ? 1.0 / n : 1.0;
    }
    double d = 0.0;
    for (std::size_t j = 0; j < D; ++j) {
      const double diff = v[j] * v_scale - e[j] * e_scale;
      d += diff * diff;
    }
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<Token>(k);
    }
  }
  return best;
}

std::size_t lcm_of_strides(std::span<const QuantizerLevel> levels) {
  std::size_t l = 1;
  for (const auto& lv : levels) l = std::lcm(l, lv.config.stride);
  return l;
}

FrameTensor dequantize_level(std::span<const Token> tokens, const QuantizerLevel& level) {
  const Codebook& cb = level.codebook;
  FrameTensor coarse(tokens.size(), cb.out_proj.out_features);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] >= cb.size()) {
      throw Error(Errc::out_of_range, "dequantize: token " + std::to_string(tokens[t]) +
                                          " out of range for codebook of size " +
                                          std::to_string(cb.size()));
    }
    const auto out = linear(cb.entries.frame(tokens[t]), cb.out_proj);
    std::copy(out.begin(), out.end(), coarse.frame(t).begin());
  }
  return nn_upsample(coarse, level.config.stride);
}

namespace {

void accumulate(FrameTensor& sum, const FrameTensor& term) {
  auto s = sum.data();
  auto t = term.data();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += t[i];
}

void check_levels(std::span<const QuantizerLevel> levels) {
  for (const auto& lv : levels) {
    if (lv.config.stride == 0) throw Error(Errc::invalid_argument, "quantizer: stride must be >= 1");
    lv.codebook.validate();
  }
}

}  // namespace

QuantizeResult quantize(const FrameTensor& z, std::span<const QuantizerLevel> levels) {
  check_levels(levels);
  QuantizeResult result;
  result.residual = z;
  result.z_hat = FrameTensor(z.frames(), z.channels());
  for (const auto& lv : levels) {
    const Codebook& cb = lv.codebook;
    if (cb.latent_dim() != z.channels()) {
      throw Error(Errc::shape_mismatch, "quantize: latent has " + std::to_string(z.channels()) +
                                            " channels, codebook expects " +
                                            std::to_string(cb.latent_dim()));
    }
    if (z.frames() % lv.config.stride != 0) {
      throw Error(Errc::divisibility, "quantize: " + std::to_string(z.frames()) +
                                          " latent frames not divisible by stride " +
                                          std::to_string(lv.config.stride));
    }
    const FrameTensor pooled = avg_pool(result.residual, lv.config.stride);
    std::vector<Token> tokens(pooled.frames());
    for (std::size_t t = 0; t < pooled.frames(); ++t) {
      tokens[t] = lookup_nearest(linear(pooled.frame(t), cb.in_proj), cb);
    }
    const FrameTensor q = dequantize_level(tokens, lv);
    result.residual = subtract(result.residual, q);
    accumulate(result.z_hat, q);
    result.codes.levels.push_back(std::move(tokens));
  }
  return result;
}

std::size_t latent_frames(const MultiScaleCodes& codes, std::span<const QuantizerLevel> levels) {
  if (codes.levels.size() != levels.size()) {
    throw Error(Errc::shape_mismatch, "codes have " + std::to_string(codes.levels.size()) +
                                          " levels, quantizer has " +
                                          std::to_string(levels.size()));
  }
  if (levels.empty()) return 0;
  const std::size_t T = codes.levels[0].size() * levels[0].config.stride;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (codes.levels[i].size() * levels[i].config.stride != T) {
      throw Error(Errc::shape_mismatch, "codes: level " + std::to_string(i) + " has " +
                                            std::to_string(codes.levels[i].size()) +
                                            " tokens, inconsistent with " + std::to_string(T) +
                                            " latent frames");
    }
  }
  return T;
}

FrameTensor dequantize(const MultiScaleCodes& codes, std::span<const QuantizerLevel> levels) {
  check_levels(levels);
  const std::size_t T = latent_frames(codes, levels);
  const std::size_t C = levels.empty() ? 0 : levels[0].codebook.out_proj.out_features;
  FrameTensor sum(T, C);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    accumulate(sum, dequantize_level(codes.levels[i], levels[i]));
  }
  return sum;
}

std::vector<LevelUsage> codebook_usage(const MultiScaleCodes& codes,
                                       std::span<const QuantizerLevel> levels) {
  if (codes.levels.size() != levels.size()) {
    throw Error(Errc::shape_mismatch, "codebook_usage: level count mismatch");
  }
  std::vector<LevelUsage> out(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::size_t K = levels[i].codebook.size();
    LevelUsage& u = out[i];
    u.counts.assign(K, 0);
    for (Token tok : codes.levels[i]) {
      if (tok >= K) throw Error(Errc::out_of_range, "codebook_usage: token out of range");
      ++u.counts[tok];
    }
    const double n = static_cast<double>(codes.levels[i].size());
    if (K < 2 || n == 0.0) continue;
    double h = 0.0;
    for (std::size_t c : u.counts) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
    u.entropy = std::clamp(h / std::log(static_cast<double>(K)), 0.0, 1.0);
  }
  return out;
}

}  // namespace mscodec
