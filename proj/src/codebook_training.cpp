#include "mscodec/codebook_training.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

namespace mscodec {

namespace {

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = static_cast<double>(a[j]) - b[j];
    d += diff * diff;
  }
  return d;
}

double mean_squared_norm(const FrameTensor& x) {
  if (x.frames() == 0) return 0.0;
  double s = 0.0;
  for (float v : x.data()) s += static_cast<double>(v) * v;
  return s / static_cast<double>(x.frames());
}

std::size_t distinct_rows(const FrameTensor& x) {
  std::set<std::vector<float>> rows;
  for (std::size_t t = 0; t < x.frames(); ++t) {
    const auto r = x.frame(t);
    rows.emplace(r.begin(), r.end());
  }
  return rows.size();
}

// Identity for D == C, zero-padded identity for D > C, principal axes of
// `pooled` (centered) for D < C.
std::pair<Linear, Linear> fit_projections(const FrameTensor& pooled, std::size_t D) {
  const std::size_t C = pooled.channels();
  if (D >= C) {
    Linear in = Linear::zeros(C, D, true);
    Linear out = Linear::zeros(D, C, true);
    for (std::size_t i = 0; i < C; ++i) {
      in.weight[i * C + i] = 1.0f;
      out.weight[i * D + i] = 1.0f;
    }
    return {std::move(in), std::move(out)};
  }

  const auto N = static_cast<Eigen::Index>(pooled.frames());
  Eigen::MatrixXd X(N, static_cast<Eigen::Index>(C));
  for (Eigen::Index n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      X(n, static_cast<Eigen::Index>(c)) = pooled(static_cast<std::size_t>(n), c);
  const Eigen::VectorXd mean = X.colwise().mean();
  X.rowwise() -= mean.transpose();
  const Eigen::MatrixXd cov = (X.transpose() * X) / static_cast<double>(std::max<Eigen::Index>(N, 1));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::MatrixXd& vecs = solver.eigenvectors();  // ascending eigenvalues

  Linear in = Linear::zeros(C, D, true);
  Linear out = Linear::zeros(D, C, true);
  for (std::size_t j = 0; j < D; ++j) {
    const Eigen::VectorXd axis = vecs.col(static_cast<Eigen::Index>(C - 1 - j));
    in.bias[j] = static_cast<float>(-axis.dot(mean));
    for (std::size_t c = 0; c < C; ++c) {
      const auto a = static_cast<float>(axis(static_cast<Eigen::Index>(c)));
      in.weight[j * C + c] = a;
      out.weight[c * D + j] = a;
    }
  }
  for (std::size_t c = 0; c < C; ++c) out.bias[c] = static_cast<float>(mean(static_cast<Eigen::Index>(c)));
  return {std::move(in), std::move(out)};
}

FrameTensor kmeans_plus_plus(const FrameTensor& y, std::size_t K, std::mt19937_64& rng) {
  const std::size_t N = y.frames();
  const std::size_t D = y.channels();
  FrameTensor centers(K, D);
  std::uniform_int_distribution<std::size_t> pick(0, N - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto copy_row = [&](std::size_t k, std::size_t n) {
    const auto src = y.frame(n);
    std::copy(src.begin(), src.end(), centers.frame(k).begin());
  };
  copy_row(0, pick(rng));
  std::vector<double> nearest(N);
  for (std::size_t n = 0; n < N; ++n) nearest[n] = squared_distance(y.frame(n), centers.frame(0));

  for (std::size_t k = 1; k < K; ++k) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    std::size_t chosen = N - 1;
    if (total <= 0.0) {
      chosen = pick(rng);
    } else {
      const double target = unit(rng) * total;
      double run = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        run += nearest[n];
        if (run > target) {
          chosen = n;
          break;
        }
      }
    }
    copy_row(k, chosen);
    for (std::size_t n = 0; n < N; ++n) {
      nearest[n] = std::min(nearest[n], squared_distance(y.frame(n), centers.frame(k)));
    }
  }
  return centers;
}

Codebook train_level(const FrameTensor& y, Codebook cb, const TrainingOptions& opts,
                     std::mt19937_64& rng, LevelTrainingReport& report) {
  const std::size_t N = y.frames();
  const std::size_t K = cb.size();
  const std::size_t D = cb.dim();
  std::uniform_int_distribution<std::size_t> pick(0, N - 1);

  std::vector<double> ema_count(K, 0.0);
  std::vector<double> ema_sum(K * D, 0.0);
  std::vector<double> count(K);
  std::vector<double> sum(K * D);
  std::vector<Token> assign(N);
  const double decay = opts.ema_decay;

  for (std::size_t it = 0; it < opts.iterations; ++it) {
    std::fill(count.begin(), count.end(), 0.0);
    std::fill(sum.begin(), sum.end(), 0.0);
    double err = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const Token k = lookup_nearest(y.frame(n), cb);
      assign[n] = k;
      err += squared_distance(y.frame(n), cb.entries.frame(k));
      count[k] += 1.0;
      const float* yr = y.frame(n).data();
      for (std::size_t j = 0; j < D; ++j) sum[k * D + j] += yr[j];
    }
    report.mse.push_back(err / static_cast<double>(N));

    for (std::size_t k = 0; k < K; ++k) {
      if (it == 0) {
        ema_count[k] = count[k];
      } else {
        ema_count[k] = decay * ema_count[k] + (1.0 - decay) * count[k];
      }
      for (std::size_t j = 0; j < D; ++j) {
        double& s = ema_sum[k * D + j];
        s = it == 0 ? sum[k * D + j] : decay * s + (1.0 - decay) * sum[k * D + j];
      }
      if (ema_count[k] > 1e-12) {
        for (std::size_t j = 0; j < D; ++j) {
          cb.entries(k, j) = static_cast<float>(ema_sum[k * D + j] / ema_count[k]);
        }
      }
    }

    // No re-seeding after the final pass: the returned codebook is the one
    // the last statistics were computed for.
    if (opts.dead_code_threshold <= 0.0 || it + 1 == opts.iterations) continue;
    for (std::size_t k = 0; k < K; ++k) {
      if (count[k] >= opts.dead_code_threshold) continue;
      const auto src = y.frame(pick(rng));
      std::copy(src.begin(), src.end(), cb.entries.frame(k).begin());
      ema_count[k] = opts.dead_code_threshold;
      for (std::size_t j = 0; j < D; ++j) ema_sum[k * D + j] = src[j] * opts.dead_code_threshold;
      ++report.dead_code_resets;
    }
  }

  double err = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    err += squared_distance(y.frame(n), cb.entries.frame(lookup_nearest(y.frame(n), cb)));
  }
  report.final_mse = N ? err / static_cast<double>(N) : 0.0;
  return cb;
}

}  // namespace

TrainingResult train_codebooks_ema(const FrameTensor& features, std::span<const LevelConfig> levels,
                                   const TrainingOptions& opts) {
  if (features.channels() == 0) throw Error(Errc::invalid_argument, "train: features have no channels");
  if (!(opts.ema_decay >= 0.0 && opts.ema_decay < 1.0)) {
    throw Error(Errc::invalid_argument, "train: ema_decay must lie in [0, 1)");
  }
  std::size_t k_max = 0;
  std::size_t lcm = 1;
  for (const auto& lv : levels) {
    if (lv.stride == 0 || lv.codebook_size == 0 || lv.codeword_dim == 0) {
      throw Error(Errc::invalid_argument, "train: stride, codebook size and codeword dim must be >= 1");
    }
    k_max = std::max(k_max, lv.codebook_size);
    lcm = std::lcm(lcm, lv.stride);
  }
  if (features.frames() < k_max) {
    throw Error(Errc::insufficient_data, "train: " + std::to_string(features.frames()) +
                                             " frames available, need at least " +
                                             std::to_string(k_max));
  }

  TrainingResult result;
  const std::size_t usable = features.frames() / lcm * lcm;
  if (usable == 0) {
    throw Error(Errc::insufficient_data, "train: fewer frames than lcm of strides");
  }
  if (usable != features.frames()) {
    result.warnings.push_back("dropping " + std::to_string(features.frames() - usable) +
                              " trailing frames so the frame count divides lcm(strides) = " +
                              std::to_string(lcm));
  }
  const std::size_t C = features.channels();
  FrameTensor residual(usable, C,
                       std::vector<float>(features.data().begin(),
                                          features.data().begin() + static_cast<std::ptrdiff_t>(usable * C)));

  std::mt19937_64 rng(opts.rng_seed);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const LevelConfig& cfg = levels[i];
    LevelTrainingReport report;
    report.residual_energy_before = mean_squared_norm(residual);

    const FrameTensor pooled = avg_pool(residual, cfg.stride);
    auto [in_proj, out_proj] = fit_projections(pooled, cfg.codeword_dim);
    const FrameTensor y = linear(pooled, in_proj);
    const std::size_t distinct = distinct_rows(y);
    if (distinct < cfg.codebook_size) {
      result.warnings.push_back("level " + std::to_string(i) + ": codebook size " +
                                std::to_string(cfg.codebook_size) + " exceeds the " +
                                std::to_string(distinct) + " distinct training vectors");
    }

    Codebook cb;
    cb.entries = kmeans_plus_plus(y, cfg.codebook_size, rng);
    cb.in_proj = std::move(in_proj);
    cb.out_proj = std::move(out_proj);
    cb.normalize = opts.normalize;
    cb = train_level(y, std::move(cb), opts, rng, report);

    QuantizerLevel level{cfg, std::move(cb)};
    const QuantizeResult q = quantize(residual, std::span<const QuantizerLevel>(&level, 1));
    residual = q.residual;
    report.residual_energy_after = mean_squared_norm(residual);
    report.usage_entropy = codebook_usage(q.codes, std::span<const QuantizerLevel>(&level, 1))[0].entropy;

    result.levels.push_back(std::move(level));
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace mscodec
