#include "tracerecon/sparse_mixture.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace tracerecon;

TEST(RunProfile, WorkedExample) {
  const auto p = profile_from_string(BitString::from_string("1001100"));
  EXPECT_EQ(p.counts, (std::vector<std::uint32_t>{1, 1, 3, 3}));
}

TEST(RunProfile, AllZerosAndAllOnes) {
  EXPECT_EQ(profile_from_string(BitString::from_string("0000")).counts,
            (std::vector<std::uint32_t>{0, 0, 0, 0}));
  EXPECT_TRUE(profile_from_string(BitString::from_string("111")).counts.empty());
}

TEST(StringFromProfile, InvertsWorkedExample) {
  RunProfile p;
  p.counts = {1, 1, 3, 3};
  EXPECT_EQ(string_from_profile(p, 3).to_string(), "1001100");
  EXPECT_EQ(string_from_profile(RunProfile{}, 2).to_string(), "11");
  RunProfile z;
  z.counts = {0};
  EXPECT_EQ(string_from_profile(z, 0).to_string(), "0");
  RunProfile bad;
  bad.counts = {4};
  EXPECT_THROW(string_from_profile(bad, 3), std::invalid_argument);
}

TEST(RunProfile, RoundTripExhaustive) {
  // all strings with n <= 16 would be 2^17 cases; cover n <= 12 exhaustively
  for (std::size_t n = 0; n <= 12; ++n) {
    for (std::uint32_t v = 0; v < (1u << n); ++v) {
      BitString x;
      for (std::size_t i = 0; i < n; ++i) x.push_back((v >> i) & 1);
      const auto profile = profile_from_string(x);
      const auto back = string_from_profile(profile, static_cast<std::uint32_t>(x.count_ones()));
      ASSERT_EQ(back, x) << "n=" << n << " v=" << v;
    }
  }
}

TEST(MixturePmf, SingleComponents) {
  BinomialMixture zero{{0}, {1.0}, 0.5};
  EXPECT_DOUBLE_EQ(mixture_pmf(zero, 0), 1.0);
  EXPECT_DOUBLE_EQ(mixture_pmf(zero, 1), 0.0);

  BinomialMixture two{{2}, {1.0}, 0.5};
  EXPECT_DOUBLE_EQ(mixture_pmf(two, 0), 0.25);
  EXPECT_DOUBLE_EQ(mixture_pmf(two, 1), 0.5);
  EXPECT_DOUBLE_EQ(mixture_pmf(two, 2), 0.25);
}

TEST(MixturePmf, HandExpandedMixture) {
  // 1/2 Bin(1,1/2) + 1/2 Bin(2,1/2): pmf(0) = 1/2*1/2 + 1/2*1/4 = 3/8
  BinomialMixture m{{1, 2}, {0.5, 0.5}, 0.5};
  EXPECT_DOUBLE_EQ(mixture_pmf(m, 0), 3.0 / 8.0);
}

TEST(MixturePmf, SumsToOne) {
  BinomialMixture m{{0, 3, 7}, {0.2, 0.5, 0.3}, 0.37};
  double total = 0;
  for (std::uint32_t t = 0; t <= 7; ++t) total += mixture_pmf(m, t);
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(MixtureTv, BasicCases) {
  BinomialMixture a{{0}, {1.0}, 0.5};
  BinomialMixture b{{1}, {1.0}, 0.5};
  EXPECT_DOUBLE_EQ(mixture_tv_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mixture_tv_distance(a, b), 1.0);
  BinomialMixture c{{1}, {1.0}, 0.4};
  EXPECT_THROW(mixture_tv_distance(a, c), std::invalid_argument);
}

namespace {

std::vector<BinomialMixture> uniform_weight_mixtures(std::uint32_t a, std::uint32_t dmax, double q) {
  std::vector<BinomialMixture> out;
  for (std::uint32_t mask = 1; mask < (1u << (a + 1)); ++mask) {
    const auto d = static_cast<std::uint32_t>(std::popcount(mask));
    if (d > dmax) continue;
    BinomialMixture m;
    m.q = q;
    for (std::uint32_t v = 0; v <= a; ++v)
      if ((mask >> v) & 1) m.support.push_back(v);
    m.weights.assign(d, 1.0 / d);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

TEST(MixtureTv, MetricPropertiesOnUniformGrid) {
  // symmetry and identity of indiscernibles over support in {0..6}, d <= 3
  const auto mixtures = uniform_weight_mixtures(6, 3, 0.5);
  for (std::size_t i = 0; i < mixtures.size(); ++i)
    for (std::size_t j = i; j < mixtures.size(); ++j) {
      const double dij = mixture_tv_distance(mixtures[i], mixtures[j]);
      const double dji = mixture_tv_distance(mixtures[j], mixtures[i]);
      EXPECT_DOUBLE_EQ(dij, dji);
      if (i == j)
        EXPECT_DOUBLE_EQ(dij, 0.0);
      else
        EXPECT_GT(dij, 0.0);
    }
  // triangle inequality on sampled triples
  for (std::size_t i = 0; i < mixtures.size(); i += 7)
    for (std::size_t j = 1; j < mixtures.size(); j += 11)
      for (std::size_t l = 2; l < mixtures.size(); l += 13) {
        const double dij = mixture_tv_distance(mixtures[i], mixtures[j]);
        const double djl = mixture_tv_distance(mixtures[j], mixtures[l]);
        const double dil = mixture_tv_distance(mixtures[i], mixtures[l]);
        EXPECT_LE(dil, dij + djl + 1e-12);
      }
}

TEST(MixtureTv, SampleBoundExceedsEnumeratedGap) {
  // minimum nonzero pairwise distance over the uniform-weight grid bounds
  // the sample count the learner needs: m > log(#candidates)/eps^2
  const auto mixtures = uniform_weight_mixtures(6, 3, 0.5);
  double eps = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mixtures.size(); ++i)
    for (std::size_t j = i + 1; j < mixtures.size(); ++j)
      eps = std::min(eps, mixture_tv_distance(mixtures[i], mixtures[j]));
  EXPECT_GT(eps, 0.0);
  const double required = std::log(static_cast<double>(mixtures.size())) / (eps * eps);
  EXPECT_GT(required, 0.0);
  EXPECT_LT(required, 1e12);  // enumerable at desk scale
}

TEST(LearnMixture, PicksNearestTrivialCandidate) {
  // all samples 0 with candidates over support {0..4}: Bin(0,1/2) wins
  std::vector<std::int64_t> samples(100, 0);
  const auto m = learn_mixture(samples, 4, 1, 1, 0.5);
  EXPECT_EQ(m.support, (std::vector<std::uint32_t>{0}));
  EXPECT_DOUBLE_EQ(m.weights[0], 1.0);
}

TEST(LearnMixture, ArgminBeatsTruthByDefinition) {
  Rng rng(31);
  BinomialMixture truth{{1, 3}, {0.5, 0.5}, 0.5};
  std::vector<std::int64_t> samples;
  for (int i = 0; i < 20000; ++i) {
    const std::uint32_t a = rng.bernoulli(0.5) ? 1 : 3;
    std::int64_t s = 0;
    for (std::uint32_t b = 0; b < a; ++b) s += rng.bernoulli(0.5);
    samples.push_back(s);
  }
  const auto learned = learn_mixture(samples, 3, 2, 2, 0.5);
  // empirical distance of the argmin is <= that of the truth
  std::vector<double> emp(4, 0.0);
  for (auto s : samples) emp[static_cast<std::size_t>(s)] += 1.0 / samples.size();
  auto dist = [&](const BinomialMixture& m) {
    double d = 0;
    for (std::uint32_t t = 0; t <= 3; ++t) d += std::abs(emp[t] - mixture_pmf(m, t));
    return d;
  };
  EXPECT_LE(dist(learned), dist(truth) + 1e-12);
}

TEST(LearnMixture, ExactRecoveryAtModerateSampleSize) {
  // 1e5 samples from 1/2 Bin(1,1/2) + 1/2 Bin(3,1/2), grid 1/2: exact in
  // >= 99/100 seeded runs
  Rng master(32);
  int good = 0;
  std::vector<std::int64_t> samples(100000);
  for (int run = 0; run < 100; ++run) {
    Rng sub = master.fork(run);
    for (auto& s : samples) {
      const std::uint32_t a = sub.bernoulli(0.5) ? 1 : 3;
      std::int64_t v = 0;
      for (std::uint32_t b = 0; b < a; ++b) v += sub.bernoulli(0.5);
      s = v;
    }
    const auto m = learn_mixture(samples, 3, 2, 2, 0.5);
    if (m.support == std::vector<std::uint32_t>{1, 3} && m.weights[0] == 0.5) ++good;
  }
  EXPECT_GE(good, 99);
}

TEST(LearnMixture, BudgetEnforced) {
  std::vector<std::int64_t> samples(10, 1);
  EXPECT_THROW(learn_mixture(samples, 40, 20, 1000, 0.5, 1000), BudgetExceededError);
}

TEST(ReconstructSparse, AllZerosTrivial) {
  Rng rng(33);
  std::vector<BitString> traces{BitString::from_string("000"), BitString::from_string("00")};
  const auto res = reconstruct_sparse(traces, 5, 0, ChannelParams::symmetric(0.3), rng);
  ASSERT_TRUE(res.ok);
  EXPECT_EQ(res.value.to_string(), "00000");
}

TEST(ReconstructSparse, EndToEndSmall) {
  // n=7, k=3 worked example at p=0.3 with plenty of traces
  Rng master(34);
  const BitString x = BitString::from_string("1001100");
  const ChannelParams params = ChannelParams::symmetric(0.3);
  std::vector<BitString> traces;
  traces.reserve(200000);
  for (int i = 0; i < 200000; ++i) {
    Rng sub = master.fork(i);
    traces.push_back(delete_sequence(x, params, sub));
  }
  Rng algo(35);
  const auto res = reconstruct_sparse(traces, 7, 3, params, algo);
  ASSERT_TRUE(res.ok) << res.error;
  EXPECT_EQ(res.value, x);
}

TEST(ReconstructSparse, FullPipelineRecoversN20Example) {
  Rng master(36);
  const BitString x = BitString::from_string("10001000100000000000");
  const ChannelParams params = ChannelParams::symmetric(0.3);
  std::vector<BitString> traces;
  const int m = 300000;
  traces.reserve(m);
  for (int i = 0; i < m; ++i) {
    Rng sub = master.fork(i);
    traces.push_back(delete_sequence(x, params, sub));
  }
  Rng algo(37);
  const auto res = reconstruct_sparse(traces, 20, 3, params, algo);
  ASSERT_TRUE(res.ok) << res.error;
  EXPECT_EQ(res.value, x);
}
