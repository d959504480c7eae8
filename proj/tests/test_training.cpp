#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mscodec/codebook_training.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mscodec;
namespace ts = testing_support;

namespace {

// Slowly varying multi-channel signal: a random walk plus white noise.
FrameTensor smooth_features(ts::Rng& rng, std::size_t T, std::size_t C) {
  FrameTensor x(T, C);
  std::normal_distribution<float> step(0.0f, 0.3f), jitter(0.0f, 0.2f);
  std::vector<float> level(C, 0.0f);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c) {
      level[c] = 0.95f * level[c] + step(rng);
      x(t, c) = level[c] + jitter(rng);
    }
  return x;
}

}  // namespace

TEST_CASE("K=1 converges to the feature mean") {
  ts::Rng rng(31);
  const auto x = ts::random_tensor(rng, 200, 3);
  const std::vector<LevelConfig> levels{{1, 1, 3}};
  const auto r = train_codebooks_ema(x, levels, {.iterations = 5});
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t t = 0; t < 200; ++t) mean += x(t, c) / 200.0;
    CHECK(r.levels[0].codebook.entries(0, c) == doctest::Approx(mean).epsilon(1e-5));
  }
}

TEST_CASE("four separated clusters: MSE near within-cluster variance and Lloyd's oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ts::Rng rng(seed);
    const auto data = ts::four_gaussians(rng, 250, 2);
    const std::vector<LevelConfig> levels{{1, 4, 2}};
    const auto r = train_codebooks_ema(data.points, levels, {.rng_seed = seed});
    const double mse = ts::mean_energy(quantize(data.points, r.levels).residual);
    CHECK(r.reports[0].final_mse == doctest::Approx(mse).epsilon(1e-6));
    CHECK(mse <= 1.5 * data.within_variance);
    CHECK(mse <= 1.5 * oracle::lloyd_kmeans_mse(data.points, 4, seed));
  }
}

TEST_CASE("training is deterministic for a seed") {
  ts::Rng rng(32);
  const auto x = smooth_features(rng, 256, 4);
  const std::vector<LevelConfig> levels{{4, 8, 2}, {1, 8, 4}};
  const TrainingOptions opts{.iterations = 10, .rng_seed = 9};
  const auto a = train_codebooks_ema(x, levels, opts);
  const auto b = train_codebooks_ema(x, levels, opts);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.levels[i].codebook.entries == b.levels[i].codebook.entries);
    CHECK(a.levels[i].codebook.in_proj.weight == b.levels[i].codebook.in_proj.weight);
    CHECK(a.levels[i].codebook.out_proj.weight == b.levels[i].codebook.out_proj.weight);
  }
}

TEST_CASE("residual energy does not grow with more levels") {
  ts::Rng rng(33);
  const auto x = smooth_features(rng, 2048, 4);
  const std::vector<LevelConfig> levels{{8, 32, 4}, {4, 32, 4}, {2, 32, 4}, {1, 32, 4}};
  const auto r = train_codebooks_ema(x, levels, {.iterations = 20, .rng_seed = 4});
  double previous = ts::mean_energy(x);
  for (std::size_t k = 1; k <= levels.size(); ++k) {
    const double e = ts::mean_energy(quantize(x, std::span(r.levels).first(k)).residual);
    CHECK(e <= 1.01 * previous);
    CHECK(r.reports[k - 1].residual_energy_after == doctest::Approx(e).epsilon(1e-6));
    previous = e;
  }
}

TEST_CASE("projection to fewer dimensions") {
  ts::Rng rng(34);
  const auto x = smooth_features(rng, 512, 6);
  const std::vector<LevelConfig> levels{{2, 16, 2}, {1, 16, 3}};
  const auto r = train_codebooks_ema(x, levels, {.iterations = 10});
  CHECK(r.levels[0].codebook.in_proj.out_features == 2);
  CHECK(r.levels[0].codebook.out_proj.out_features == 6);
  const auto q = quantize(x, r.levels);
  CHECK(ts::mean_energy(q.residual) < ts::mean_energy(x));
}

TEST_CASE("training errors and warnings") {
  ts::Rng rng(35);
  const std::vector<LevelConfig> big{{1, 64, 2}};
  try {
    train_codebooks_ema(ts::random_tensor(rng, 10, 2), big, {});
    FAIL("expected insufficient_data");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_data);
  }

  FrameTensor repeated(40, 2);
  for (std::size_t t = 0; t < 40; ++t) repeated(t, 0) = static_cast<float>(t % 2);
  const std::vector<LevelConfig> four{{1, 4, 2}};
  CHECK_FALSE(train_codebooks_ema(repeated, four, {.iterations = 3}).warnings.empty());

  const std::vector<LevelConfig> pooled{{4, 2, 2}};
  const auto r = train_codebooks_ema(ts::random_tensor(rng, 10, 2), pooled, {.iterations = 2});
  CHECK_FALSE(r.warnings.empty());
}
