#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "perplex/error.hpp"
#include "perplex/hypothesis.hpp"
#include "perplex/infometrics.hpp"
#include "perplex/seeding.hpp"

using namespace perplex;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NamedModel named(std::string id, MarkovModel m) {
  return {std::move(id), std::make_shared<const MarkovModel>(std::move(m))};
}

}  // namespace

TEST(AttributionDecision, StrictComparisonAgainstBestB) {
  EXPECT_EQ(attribution_decision({{"A1", 1.2}}, {{"B1", 1.5}, {"B2", 1.4}}, 10).decision, Decision::RejectNull);
  EXPECT_EQ(attribution_decision({{"A1", 1.4}}, {{"B1", 1.4}}, 10).decision, Decision::RetainNull);
  EXPECT_EQ(attribution_decision({{"A1", 1.5}, {"A2", 1.3}}, {{"B1", 1.4}}, 10).decision, Decision::RejectNull);
  const auto out = attribution_decision({{"A1", 1.2}}, {{"B1", 1.5}, {"B2", 1.4}}, 10);
  EXPECT_NEAR(out.statistic, -0.2, 1e-15);
  EXPECT_EQ(out.per_model_nll.size(), 3u);
  EXPECT_EQ(out.n_scored, 10u);
}

TEST(AttributionDecision, InfiniteModelsLeaveContention) {
  const auto none_a = attribution_decision({{"A1", kInf}}, {{"B1", 1.0}}, 5);
  EXPECT_EQ(none_a.decision, Decision::CertainNotA);
  EXPECT_TRUE(std::isinf(none_a.statistic));

  const auto one_a = attribution_decision({{"A1", kInf}, {"A2", 2.0}}, {{"B1", 1.0}}, 5);
  EXPECT_EQ(one_a.decision, Decision::RetainNull);

  const auto no_b = attribution_decision({{"A1", 3.0}}, {{"B1", kInf}}, 5);
  EXPECT_EQ(no_b.decision, Decision::RejectNull);
  EXPECT_EQ(no_b.statistic, -kInf);
}

TEST(AttributionDecision, Errors) {
  EXPECT_THROW(attribution_decision({}, {{"B", 1.0}}, 1), DomainError);
  EXPECT_THROW(attribution_decision({{"X", 1.0}}, {{"X", 2.0}}, 1), DomainError);
  EXPECT_THROW(attribution_decision({{"A", std::nan("")}}, {{"B", 1.0}}, 1), DomainError);
}

TEST(AttributionDecision, InvariantUnderIncreasingTransform) {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    std::map<std::string, double> a, b;
    for (int i = 0; i < 3; ++i) a["A" + std::to_string(i)] = 0.5 + rng.uniform();
    for (int i = 0; i < 4; ++i) b["B" + std::to_string(i)] = 0.5 + rng.uniform();
    if (trial % 5 == 0) b["B0"] = a["A1"];  // exercise ties
    auto transform = [](std::map<std::string, double> m) {
      for (auto& [id, v] : m) v = std::exp(3.0 * v) + 7.0;
      return m;
    };
    EXPECT_EQ(attribution_decision(a, b, 1).decision,
              attribution_decision(transform(a), transform(b), 1).decision);
  }
}

TEST(AttributionTest, ComputesMeanNllPerModel) {
  auto a = named("A1", fixture::order0({0.7, 0.2, 0.1}));
  auto b = named("B1", fixture::order0({0.2, 0.2, 0.6}));
  const auto text = fixture::text({2, 0, 0, 0, 1}, 1);
  const std::vector<NamedModel> set_a{a}, set_b{b};
  const auto out = attribution_test(set_a, set_b, text);
  EXPECT_NEAR(out.per_model_nll.at("A1"), -(3 * std::log(0.7) + std::log(0.2)) / 4, 1e-15);
  EXPECT_NEAR(out.per_model_nll.at("B1"), -(3 * std::log(0.2) + std::log(0.2)) / 4, 1e-15);
  EXPECT_EQ(out.decision, Decision::RejectNull);
  EXPECT_EQ(out.n_scored, 4u);
}

TEST(AttributionTest, ZeroProbabilityRemovesModel) {
  const std::vector<NamedModel> set_a{named("A1", fixture::order0({0.5, 0.5, 0.0}))};
  const std::vector<NamedModel> set_b{named("B1", fixture::order0({0.3, 0.3, 0.4}))};
  EXPECT_EQ(attribution_test(set_a, set_b, fixture::text({0, 2})).decision, Decision::CertainNotA);
}

TEST(AttributionTest, PermutationAndDuplicationInvariance) {
  std::vector<NamedModel> set_a, set_b;
  for (int i = 0; i < 3; ++i) set_a.push_back(named("A" + std::to_string(i), random_markov(Alphabet(4), 1, 0.5, 1e-3, 10 + i)));
  for (int i = 0; i < 3; ++i) set_b.push_back(named("B" + std::to_string(i), random_markov(Alphabet(4), 1, 0.5, 1e-3, 20 + i)));
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto text = generate(*set_a[s % 3].model, {}, 30, s);
    const Decision base = attribution_test(set_a, set_b, text).decision;
    auto pa = set_a;
    auto pb = set_b;
    std::reverse(pa.begin(), pa.end());
    std::rotate(pb.begin(), pb.begin() + 1, pb.end());
    EXPECT_EQ(attribution_test(pa, pb, text).decision, base);
    pa.push_back(pa.front());
    pb.push_back(pb.back());
    EXPECT_EQ(attribution_test(pa, pb, text).decision, base);
  }
}

TEST(AttributionTest, RejectsSharedOrMismatchedModels) {
  auto m = named("M", fixture::order0({0.5, 0.5}));
  const std::vector<NamedModel> a{m};
  std::vector<NamedModel> b{NamedModel{"other", m.model}};
  EXPECT_THROW(attribution_test(a, b, fixture::text({0, 1})), DomainError);
  b = {named("K3", fixture::order0({0.2, 0.3, 0.5}))};
  EXPECT_THROW(attribution_test(a, b, fixture::text({0, 1})), DomainError);
  b = {named("B", fixture::order0({0.2, 0.8}))};
  EXPECT_THROW(attribution_test(a, b, fixture::text({0, 1}, 2)), DomainError);
  const std::vector<NamedModel> dup{named("B", fixture::order0({0.3, 0.7})), named("B", fixture::order0({0.4, 0.6}))};
  EXPECT_THROW(attribution_test(a, dup, fixture::text({0, 1})), DomainError);
}

TEST(AttributionTest, RetainsNullForTextsFromB) {
  // Order-0 models on K = 3; B1 generates. The KL gap from B1 to each A
  // model exceeds 0.1 nats.
  const std::vector<double> b1{0.6, 0.3, 0.1};
  const std::vector<NamedModel> set_a{named("A1", fixture::order0({0.2, 0.4, 0.4})),
                                      named("A2", fixture::order0({0.25, 0.25, 0.5}))};
  const std::vector<NamedModel> set_b{named("B1", fixture::order0(b1)),
                                      named("B2", fixture::order0({0.1, 0.8, 0.1}))};
  for (const auto& a : set_a) {
    const auto row = std::dynamic_pointer_cast<const MarkovModel>(a.model)->row(0);
    ASSERT_GE(static_cast<double>(oracle::cross_entropy(b1, {row.begin(), row.end()}) - oracle::entropy(b1)), 0.1);
  }
  const auto& gen = *set_b[0].model;
  const auto probe = generate(gen, {}, 500, 7);
  EXPECT_NEAR(log_perplexity(nll_sequence(gen, probe)), static_cast<double>(oracle::entropy(b1)), 0.1);

  int retained = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto text = generate(gen, {}, 500, mix_seed(7, s));
    retained += attribution_test(set_a, set_b, text).decision == Decision::RetainNull;
  }
  EXPECT_GE(retained, 490);
}

TEST(DetectionStatistic, UniformEvaluatorIsZero) {
  const auto m = MarkovModel::uniform(Alphabet(5), 1);
  for (std::uint64_t s = 0; s < 10; ++s) {
    EXPECT_NEAR(detection_statistic(m, generate(m, {}, 100, s)), 0.0, 1e-12);
  }
  EXPECT_THROW(detection_statistic(fixture::order0({1.0, 0.0}), fixture::text({1})), SupportError);
}

TEST(DetectionStatistic, IsLogPerplexityMinusEntropy) {
  const auto m = random_markov(Alphabet(6), 1, 0.5, 1e-3, 1);
  const auto t = generate(m, std::vector<Token>{3}, 80, 2);
  EXPECT_NEAR(detection_statistic(m, t), log_perplexity(nll_sequence(m, t)) - avg_entropy(m, t), 1e-12);
}

TEST(DetectionStatistic, CrossModelMeanNearExactGap) {
  const std::vector<double> b{0.6, 0.3, 0.1};
  const std::vector<double> a{0.3, 0.4, 0.3};
  const auto gen = fixture::order0(b);
  const auto eval = fixture::order0(a);
  const double gap = static_cast<double>(oracle::cross_entropy(b, a) - oracle::entropy(a));
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) sum += detection_statistic(eval, generate(gen, {}, 200, mix_seed(9, s)));
  EXPECT_NEAR(sum / 1000.0, gap, 0.02);
}

TEST(DetectionDecision, Examples) {
  EXPECT_EQ(detection_decision(0.05, 0.1, Sidedness::TwoSided), Decision::RejectNull);
  EXPECT_EQ(detection_decision(0.15, 0.1, Sidedness::TwoSided), Decision::RetainNull);
  EXPECT_EQ(detection_decision(-0.15, 0.1, Sidedness::TwoSided), Decision::RetainNull);
  EXPECT_EQ(detection_decision(-0.3, 0.0, Sidedness::OneSided), Decision::RejectNull);
  EXPECT_EQ(detection_decision(0.1, 0.1, Sidedness::OneSided), Decision::RejectNull);
  EXPECT_EQ(detection_decision(0.2, 0.1, Sidedness::OneSided), Decision::RetainNull);
  EXPECT_NEAR(2.05 - 2.00, 0.05, 1e-12);
}

TEST(DetectionTest, OutcomeFields) {
  const auto m = MarkovModel::uniform(Alphabet(4));
  const auto out = detection_test(m, fixture::text({0, 1, 2, 3}), 0.0, Sidedness::TwoSided);
  EXPECT_EQ(out.decision, Decision::RejectNull);
  EXPECT_EQ(*out.threshold, 0.0);
  EXPECT_EQ(out.n_scored, 4u);
  EXPECT_DOUBLE_EQ(out.per_model_nll.at("evaluator"), std::log(4.0));

  const auto certain = detection_test(fixture::order0({1.0, 0.0}), fixture::text({0, 1}), 0.5, Sidedness::OneSided);
  EXPECT_EQ(certain.decision, Decision::CertainNotA);
  EXPECT_THROW(detection_test(m, fixture::text({0}), -0.1, Sidedness::TwoSided), DomainError);
  EXPECT_NO_THROW(detection_test(m, fixture::text({0}), -0.1, Sidedness::OneSided));
}

TEST(Sidedness, Strings) {
  EXPECT_EQ(parse_sidedness("one"), Sidedness::OneSided);
  EXPECT_EQ(parse_sidedness("two"), Sidedness::TwoSided);
  EXPECT_THROW(parse_sidedness("both"), DomainError);
  EXPECT_EQ(to_string(Decision::CertainNotA), "certain_not_a");
}

TEST(Calibrate, OrderStatisticExample) {
  std::vector<double> nulls;
  for (int i = 1; i <= 100; ++i) nulls.push_back(0.01 * i);
  std::reverse(nulls.begin(), nulls.end());
  const auto p = calibrate_threshold(nulls, 0.05, Sidedness::OneSided);
  EXPECT_DOUBLE_EQ(p.threshold, 0.05);
  EXPECT_DOUBLE_EQ(p.achieved_fpr, 0.05);
  EXPECT_EQ(p.n_null, 100u);
}

TEST(Calibrate, AllTiedNullsStepBelow) {
  const std::vector<double> nulls(100, 1.0);
  const auto p = calibrate_threshold(nulls, 0.05, Sidedness::OneSided);
  EXPECT_LT(p.threshold, 1.0);
  EXPECT_EQ(p.threshold, std::nextafter(1.0, 0.0));
  EXPECT_EQ(p.achieved_fpr, 0.0);
}

TEST(Calibrate, TwoPointSet) {
  const auto p = calibrate_threshold(std::vector<double>{1.0, 3.0}, 0.5, Sidedness::OneSided);
  EXPECT_EQ(p.threshold, 1.0);
  EXPECT_EQ(p.achieved_fpr, 0.5);
}

TEST(Calibrate, TwoSidedUsesMagnitudes) {
  const auto p = calibrate_threshold(std::vector<double>{-0.01, 0.5, -0.7, 0.9}, 0.25, Sidedness::TwoSided);
  EXPECT_EQ(p.threshold, 0.01);
  EXPECT_EQ(p.achieved_fpr, 0.25);
  EXPECT_THROW(calibrate_threshold(std::vector<double>{0.0, 0.0, 0.0, 1.0}, 0.25, Sidedness::TwoSided), DomainError);
}

TEST(Calibrate, Errors) {
  EXPECT_THROW(calibrate_threshold({}, 0.05, Sidedness::OneSided), DomainError);
  EXPECT_THROW(calibrate_threshold(std::vector<double>(19, 0.0), 0.05, Sidedness::OneSided), DomainError);
  EXPECT_NO_THROW(calibrate_threshold(std::vector<double>(20, 0.0), 0.05, Sidedness::OneSided));
  EXPECT_THROW(calibrate_threshold(std::vector<double>(20, 0.0), 0.0, Sidedness::OneSided), DomainError);
  EXPECT_THROW(calibrate_threshold(std::vector<double>(20, 0.0), 1.0, Sidedness::OneSided), DomainError);
}

TEST(Calibrate, AchievedNeverExceedsTargetAndMatchesCounting) {
  Rng rng(31);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 20 + static_cast<std::size_t>(rng.uniform() * 200);
    std::vector<double> nulls(n);
    // Coarse values so ties are common.
    for (auto& v : nulls) v = std::round(rng.uniform() * 20.0) / 10.0 - 1.0;
    const double target = 0.05 + 0.4 * rng.uniform();
    const auto side = trial % 2 ? Sidedness::OneSided : Sidedness::TwoSided;
    CalibrationProfile p;
    try {
      p = calibrate_threshold(nulls, target, side);
    } catch (const DomainError&) {
      continue;
    }
    std::size_t hits = 0;
    for (const double v : nulls) hits += detection_decision(v, p.threshold, side) == Decision::RejectNull;
    EXPECT_EQ(static_cast<double>(hits) / static_cast<double>(n), p.achieved_fpr);
    EXPECT_LE(p.achieved_fpr, target);
  }
}

TEST(Calibrate, JsonRoundTrip) {
  const auto p = calibrate_threshold(std::vector<double>{0.3, 0.1, 0.7, 0.2, 0.05}, 0.2, Sidedness::OneSided);
  const auto back = profile_from_json(to_json(p));
  EXPECT_EQ(back.threshold, p.threshold);
  EXPECT_EQ(back.target_fpr, p.target_fpr);
  EXPECT_EQ(back.achieved_fpr, p.achieved_fpr);
  EXPECT_EQ(back.n_null, p.n_null);
  EXPECT_EQ(back.sidedness, p.sidedness);
  EXPECT_THROW(profile_from_json("[]"), FormatError);
  EXPECT_THROW(profile_from_json(R"({"threshold":0.1,"target_fpr":0.05,"achieved_fpr":0.06,"n_null":100,"sidedness":"one"})"),
               FormatError);
  EXPECT_THROW(profile_from_json(R"({"threshold":0.1,"target_fpr":0.05,"achieved_fpr":0.05,"n_null":100,"sidedness":"up"})"),
               FormatError);
}
