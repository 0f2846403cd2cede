#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cpisnet/metrics.hpp"
#include "cpisnet/nullmodels.hpp"
#include "oracles.hpp"

using namespace cpisnet;

namespace {

BinaryNetwork random_graph(Rng& rng, std::size_t n, double p) {
  auto net = BinaryNetwork::with_size(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && bernoulli(rng, p)) net.add_edge(i, j);
  return net;
}

// Edge-presence counts over `draws` samples of `gen`.
template <typename Gen>
std::vector<std::size_t> pair_hits(std::size_t n, std::size_t draws, Gen&& gen) {
  std::vector<std::size_t> hits(n * n, 0);
  for (std::size_t d = 0; d < draws; ++d) {
    const auto net = gen();
    for (const auto& [i, j] : net.edges()) ++hits[i * n + j];
  }
  return hits;
}

std::vector<std::size_t> off_diagonal(const std::vector<std::size_t>& m, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out.push_back(m[i * n + j]);
  return out;
}

void expect_gof(const std::vector<std::size_t>& hits, const std::vector<double>& p,
                std::size_t draws) {
  const auto g = oracle::bernoulli_gof(hits, p, draws);
  ASSERT_TRUE(g.has_value()) << "forced cell mismatch";
  if (g->cells == 0) return;
  EXPECT_LT(g->statistic, oracle::chi2_critical(static_cast<double>(g->cells), oracle::kZ001));
}

LogNormalFit synthetic_fit(std::size_t n, Rng& rng, double sigma) {
  LogNormalFit fit;
  fit.year = 2005;
  fit.countries = BinaryNetwork::with_size(n).countries();
  fit.gdp.assign(n, 1000.0);
  fit.alpha.resize(n);
  fit.beta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.alpha[i] = 3.0 + 2.0 * uniform01(rng);
    fit.beta[i] = i == 0 ? 0.0 : 2.0 * uniform01(rng) - 1.0;
  }
  fit.sigma_raw = sigma;
  fit.correction_factor = 1.0;
  fit.sigma_corrected = sigma;
  return fit;
}

AssetSlice uniform_slice(std::size_t n, double v) {
  SquareMatrix s(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s(i, j) = v;
  return AssetSlice(2005, BinaryNetwork::with_size(n).countries(), std::move(s),
                    std::vector<double>(n, 1.0));
}

}  // namespace

TEST(GenEr, ExtremeDensities) {
  Rng rng(1);
  EXPECT_EQ(gen_er(10, 0.0, rng).edge_count(), 0u);
  EXPECT_EQ(gen_er(10, 9.0, rng).edge_count(), 90u);
  EXPECT_THROW(gen_er(10, 9.5, rng), InvalidArgument);
  EXPECT_THROW(gen_er(10, -1.0, rng), InvalidArgument);
}

TEST(GenEr, MeanEdgeCountWithinThreeStandardErrors) {
  Rng rng(kDefaultSeed);
  const std::size_t draws = 10000;
  double sum = 0.0;
  for (std::size_t d = 0; d < draws; ++d) sum += static_cast<double>(gen_er(64, 12.0, rng).edge_count());
  const double p = 12.0 / 63.0;
  const double se = std::sqrt(64.0 * 63.0 * p * (1 - p) / draws);
  EXPECT_NEAR(sum / draws, 64.0 * 12.0, 3 * se);
}

TEST(GenEr, PairFrequenciesGof) {
  Rng rng(3);
  const std::size_t n = 8, draws = 4000;
  const auto hits = off_diagonal(pair_hits(n, draws, [&] { return gen_er(n, 2.5, rng); }), n);
  expect_gof(hits, std::vector<double>(hits.size(), 2.5 / 7.0), draws);
}

TEST(GenDegree, Extremes) {
  Rng rng(4);
  const std::vector<std::size_t> zeros(6, 0);
  EXPECT_EQ(gen_outdeg(zeros, rng).edge_count(), 0u);
  EXPECT_EQ(gen_indeg(zeros, rng).edge_count(), 0u);
  std::vector<std::size_t> seq = {5, 0, 1, 0, 0, 0};
  for (int d = 0; d < 20; ++d) {
    EXPECT_EQ(gen_outdeg(seq, rng).out_degree(0), 5u);
    EXPECT_EQ(gen_indeg(seq, rng).in_degree(0), 5u);
  }
  seq[1] = 6;
  EXPECT_THROW(gen_outdeg(seq, rng), InvalidArgument);
  EXPECT_THROW(gen_indeg(seq, rng), InvalidArgument);
}

TEST(GenDegree, ExpectedDegreesAndGof) {
  Rng rng(5);
  const std::vector<std::size_t> seq = {0, 1, 2, 3, 4, 5, 6, 7};
  const std::size_t n = seq.size(), draws = 4000;
  std::vector<double> p_out, p_in;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        p_out.push_back(static_cast<double>(seq[i]) / (n - 1));
        p_in.push_back(static_cast<double>(seq[j]) / (n - 1));
      }
  std::vector<double> out_sum(n, 0.0);
  const auto out_hits = off_diagonal(pair_hits(n, draws, [&] {
    auto net = gen_outdeg(seq, rng);
    for (std::size_t i = 0; i < n; ++i) out_sum[i] += static_cast<double>(net.out_degree(i));
    return net;
  }), n);
  expect_gof(out_hits, p_out, draws);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = static_cast<double>(seq[i]) / (n - 1);
    const double se = std::sqrt((n - 1) * p * (1 - p) / draws);
    EXPECT_NEAR(out_sum[i] / draws, static_cast<double>(seq[i]), 3 * se + 1e-12);
  }
  const auto in_hits = off_diagonal(pair_hits(n, draws, [&] { return gen_indeg(seq, rng); }), n);
  expect_gof(in_hits, p_in, draws);
}

TEST(GenRewired, TwoCycleUnchanged) {
  Rng rng(6);
  auto net = BinaryNetwork::with_size(2);
  net.add_edge(0, 1);
  net.add_edge(1, 0);
  EXPECT_EQ(gen_rewired(net, kDefaultSwapFactor, rng), net);
  EXPECT_THROW(gen_rewired(net, 0, rng), InvalidArgument);
}

TEST(GenRewired, OnlySwapBothConfigurationsOccur) {
  auto net = BinaryNetwork::with_size(4);
  net.add_edge(0, 1);
  net.add_edge(2, 3);
  auto swapped = BinaryNetwork::with_size(4);
  swapped.add_edge(0, 3);
  swapped.add_edge(2, 1);
  int same = 0, other = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    Rng rng(seed);
    const auto out = gen_rewired(net, kDefaultSwapFactor, rng);
    if (out == net) {
      ++same;
    } else if (out == swapped) {
      ++other;
    } else {
      ADD_FAILURE() << "unexpected configuration";
    }
  }
  EXPECT_GT(same, 120);
  EXPECT_GT(other, 120);
}

TEST(GenRewired, PreservesDegreeSequences) {
  Rng rng(7);
  for (int g = 0; g < 40; ++g) {
    const auto net = random_graph(rng, 5 + g % 20, 0.05 + 0.01 * g);
    for (int factor : {1, 3, 20}) {
      const auto out = gen_rewired(net, factor, rng);
      EXPECT_EQ(out.out_degrees(), net.out_degrees());
      EXPECT_EQ(out.in_degrees(), net.in_degrees());
      for (std::size_t i = 0; i < out.size(); ++i) EXPECT_FALSE(out.has_edge(i, i));
    }
  }
}

TEST(JarqueBera, TwoPointSample) {
  std::vector<double> x;
  for (int i = 0; i < 50; ++i) {
    x.push_back(1.0);
    x.push_back(-1.0);
  }
  const auto jb = jarque_bera(x);
  EXPECT_NEAR(jb.statistic, 100.0 / 6.0, 1e-12);
  EXPECT_NEAR(jb.p_value, std::exp(-100.0 / 12.0), 1e-15);
  EXPECT_THROW(jarque_bera(std::vector<double>(10, 3.0)), InvalidArgument);
  EXPECT_THROW(jarque_bera(std::vector<double>(7, 1.0)), InvalidArgument);
}

TEST(JarqueBera, NormalSampleCalibration) {
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(derive_seed(11, seed));
    std::vector<double> x(100000);
    for (auto& v : x) v = standard_normal(rng);
    accepted += jarque_bera(x).p_value > 0.01;
  }
  EXPECT_GE(accepted, 36);
}

TEST(FitLognormal, UniformSliceHasZeroResiduals) {
  const auto fit = fit_lognormal(uniform_slice(5, 7.0));
  EXPECT_NEAR(fit.sigma_raw, 0.0, 1e-12);
  for (double r : fit.residuals) EXPECT_NEAR(r, 0.0, 1e-12);
  EXPECT_EQ(fit.correction_factor, 1.183);
  EXPECT_EQ(fit.identification, "issuer_baseline:0");
  EXPECT_EQ(fit.beta[0], 0.0);
  EXPECT_NEAR(fit.alpha[2], std::log(8.0), 1e-12);
  EXPECT_THROW(fit_lognormal(uniform_slice(2, 1.0)), InvalidArgument);
}

TEST(FitLognormal, RecoveryImprovesWithSize) {
  double previous = 1e9;
  for (std::size_t n : {16u, 32u, 64u}) {
    double err = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(derive_seed(21, seed));
      const auto truth = synthetic_fit(n, rng, 1.5);
      const auto fit = fit_lognormal(gen_lognormal_slice(truth, rng, kNoCensoring));
      for (std::size_t i = 0; i < n; ++i)
        err += (std::abs(fit.alpha[i] - truth.alpha[i]) + std::abs(fit.beta[i] - truth.beta[i])) /
               (2.0 * static_cast<double>(n) * 10.0);
      if (n == 64) {
        EXPECT_NEAR(fit.sigma_raw, 1.5, 0.06);
      }
    }
    EXPECT_LT(err, previous);
    previous = err;
  }
}

TEST(FitLognormal, ResidualsMeanZeroAndIdentificationInvariant) {
  Rng rng(31);
  const auto truth = synthetic_fit(12, rng, 1.0);
  const auto slice = gen_lognormal_slice(truth, rng, {});
  const auto fit = fit_lognormal(slice, {1.1, SigmaDivisor::maximum_likelihood});
  const auto s = summarize_residuals(fit.residuals);
  EXPECT_LT(std::abs(s.mean), 1e-8 * s.std);
  EXPECT_NEAR(fit.sigma_raw, s.std, 1e-12);  // ML divisor equals population std
  EXPECT_NEAR(fit.sigma_corrected, 1.1 * fit.sigma_raw, 1e-15);

  // Relabel so a different country becomes the issuer baseline.
  const std::size_t n = slice.size();
  std::vector<CountryCode> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = std::string(1, static_cast<char>('a' + (i + 5) % n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return names[a] < names[b]; });
  SquareMatrix h(n);
  std::vector<CountryCode> sorted;
  for (std::size_t a = 0; a < n; ++a) {
    sorted.push_back(names[order[a]]);
    for (std::size_t b = 0; b < n; ++b) h(a, b) = slice.holding(order[a], order[b]);
  }
  const auto relabeled = fit_lognormal(AssetSlice(slice.year(), sorted, std::move(h), slice.gdp()));
  EXPECT_NE(relabeled.identification, fit.identification);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const std::size_t ra = a * (n - 1) + (b < a ? b : b - 1);
      const std::size_t i = order[a], j = order[b];
      const std::size_t ro = i * (n - 1) + (j < i ? j : j - 1);
      EXPECT_NEAR(relabeled.residuals[ra], fit.residuals[ro], 1e-9);
    }
}

TEST(GenLognormal, DeterministicAtZeroSigmaAndNonnegative) {
  Rng rng(41);
  auto truth = synthetic_fit(6, rng, 0.0);
  const auto s = gen_lognormal_slice(truth, rng);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (i != j) {
        const double raw = std::expm1(truth.alpha[i] + truth.beta[j]);
        EXPECT_EQ(s.holding(i, j), raw < 0.5 ? 0.0 : std::nearbyint(raw));
      }
  truth.alpha.assign(6, -0.5);
  truth.sigma_corrected = 2.0;
  for (int d = 0; d < 50; ++d) {
    const auto g = gen_lognormal_slice(truth, rng, kNoCensoring);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) EXPECT_GE(g.holding(i, j), 0.0);
  }
}

TEST(GenLognormal, LogMomentsMatchEffects) {
  Rng rng(43);
  const std::size_t n = 5, draws = 1000;
  const auto truth = synthetic_fit(n, rng, 1.5);
  std::vector<double> mean(n * n, 0.0);
  for (std::size_t d = 0; d < draws; ++d) {
    const auto y = draw_log_holdings(truth.alpha, truth.beta, 1.5, rng);
    for (std::size_t k = 0; k < y.size(); ++k) mean[k] += y[k] / draws;
  }
  const double se = 1.5 / std::sqrt(static_cast<double>(draws));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        EXPECT_NEAR(mean[i * n + j], truth.alpha[i] + truth.beta[j], 4 * se);
      }
}

TEST(SigmaCorrection, AtLeastOneWhenCensoringRemovesMass) {
  Rng rng(47);
  std::vector<double> alpha(16), beta(16);
  for (std::size_t i = 0; i < 16; ++i) {
    alpha[i] = 1.0 + uniform01(rng);
    beta[i] = i == 0 ? 0.0 : uniform01(rng) - 0.5;
  }
  Rng r0(1), r1(1), r2(1);
  const double f0 = estimate_sigma_correction(alpha, beta, 1.5, kNoCensoring, 100, r0);
  const double f1 = estimate_sigma_correction(alpha, beta, 1.5, {0.5, true}, 100, r1);
  const double f2 = estimate_sigma_correction(alpha, beta, 1.5, {5.0, true}, 100, r2);
  EXPECT_NEAR(f0, 1.0, 0.02);
  EXPECT_GT(f1, 1.0);
  EXPECT_GT(f2, 1.0);
  Rng r3(1);
  EXPECT_THROW(estimate_sigma_correction(alpha, beta, 1.5, {}, 99, r3), InvalidArgument);
  EXPECT_THROW(estimate_sigma_correction(alpha, beta, 0.0, {}, 100, r3), InvalidArgument);
}

TEST(SigmaCorrection, JobsDoNotChangeResult) {
  std::vector<double> alpha(8, 1.0), beta(8, 0.0);
  Rng a(5), b(5);
  EXPECT_EQ(estimate_sigma_correction(alpha, beta, 1.0, {}, 100, a, SigmaDivisor::residual_dof, 1),
            estimate_sigma_correction(alpha, beta, 1.0, {}, 100, b, SigmaDivisor::residual_dof, 4));
}

TEST(NullSpec, ParametersFromEmpirical) {
  Rng rng(53);
  auto net = random_graph(rng, 10, 0.3);
  const auto er = make_null_spec(NullModelKind::er, net);
  EXPECT_DOUBLE_EQ(er.d_bar, static_cast<double>(net.edge_count()) / 10.0);
  EXPECT_EQ(make_null_spec(NullModelKind::out_degree, net).out_seq, net.out_degrees());
  EXPECT_EQ(make_null_spec(NullModelKind::in_degree, net).in_seq, net.in_degrees());
  const auto rw = make_null_spec(NullModelKind::rewiring, net);
  const auto sample = sample_null(rw, rng);
  EXPECT_EQ(sample.out_degrees(), net.out_degrees());
  EXPECT_EQ(sample.countries(), net.countries());
  EXPECT_THROW(make_null_spec(NullModelKind::log_normal, net), InvalidArgument);
  for (auto k : kAllNullModels) EXPECT_EQ(parse_null_model(null_model_name(k)), k);
  EXPECT_FALSE(parse_null_model("pareto"));
}

TEST(NullSpec, LogNormalUsesEmpiricalRule) {
  Rng rng(59);
  const auto truth = synthetic_fit(8, rng, 1.0);
  const auto slice = gen_lognormal_slice(truth, rng);
  const auto net = threshold_b(slice, 0.05);
  const auto spec = make_null_spec(NullModelKind::log_normal, net, &slice);
  EXPECT_EQ(spec.rule.letter(), 'B');
  EXPECT_EQ(spec.rule.t, 0.05);
  const auto sample = sample_null(spec, rng);
  EXPECT_EQ(sample.rule()->letter(), 'B');
  EXPECT_EQ(sample.countries(), net.countries());
}
