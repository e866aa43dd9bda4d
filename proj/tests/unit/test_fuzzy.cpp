#include <doctest.h>

#include <json.hpp>

#include "../oracles.hpp"
#include "weathersense/fuzzy.hpp"
#include "weathersense/rng.hpp"

using namespace weathersense;

TEST_CASE("fuzzify on the default symmetric bank") {
  const InputBank bank;  // peaks 0, 0.5, 1
  {
    const auto mu = bank.fuzzify(0.0);
    CHECK(mu[0] == 1.0);
    CHECK(mu[1] == 0.0);
    CHECK(mu[2] == 0.0);
  }
  {
    const auto mu = bank.fuzzify(0.25);
    CHECK(mu[0] == doctest::Approx(0.5));
    CHECK(mu[1] == doctest::Approx(0.5));
    CHECK(mu[2] == 0.0);
  }
  {
    const auto mu = bank.fuzzify(0.5);
    CHECK(mu[1] == 1.0);
  }
  {
    const auto mu = bank.fuzzify(1.0);
    CHECK(mu[2] == 1.0);
  }
}

TEST_CASE("fuzzify covers the domain for arbitrary peak placements") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    InputBank bank;
    bank.peaks = {rng.next_double(), rng.next_double(), rng.next_double()};
    std::sort(bank.peaks.begin(), bank.peaks.end());
    for (int k = 0; k <= 50; ++k) {
      const double x = k / 50.0;
      const auto mu = bank.fuzzify(x);
      CHECK(mu[0] + mu[1] + mu[2] > 0.0);
      for (double m : mu) {
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
      }
    }
  }
}

TEST_CASE("all-good rule table defuzzifies to the good center") {
  FISNode node = canonical_monotone_node();
  node.rules.fill(2);
  for (double x1 : {0.0, 0.2, 0.5, 0.9}) {
    for (double x2 : {0.1, 0.5, 1.0}) {
      CHECK(infer(node, x1, x2) == doctest::Approx(0.9).epsilon(1.0 / 200));
    }
  }
}

TEST_CASE("symmetric rule table gives symmetric inference") {
  FISNode node = canonical_monotone_node();  // min(i,j) is symmetric
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const double x1 = rng.next_double();
    const double x2 = rng.next_double();
    CHECK(infer(node, x1, x2) == infer(node, x2, x1));
  }
}

TEST_CASE("inference matches the rule-by-rule reference engine") {
  Rng rng(2024);
  FISNode canon = canonical_monotone_node();
  CHECK(infer(canon, 0.25, 0.25) ==
        doctest::Approx(oracles::mamdani_reference(canon, 0.25, 0.25)).epsilon(1e-12));

  for (int trial = 0; trial < 500; ++trial) {
    FISNode node;
    node.input1.peaks = {rng.next_double(), rng.next_double(), rng.next_double()};
    node.input2.peaks = {rng.next_double(), rng.next_double(), rng.next_double()};
    std::sort(node.input1.peaks.begin(), node.input1.peaks.end());
    std::sort(node.input2.peaks.begin(), node.input2.peaks.end());
    for (auto& r : node.rules) r = static_cast<int>(rng.next_below(3));
    const double x1 = rng.next_double();
    const double x2 = rng.next_double();
    const double got = infer(node, x1, x2);
    const double want = oracles::mamdani_reference(node, x1, x2);
    CHECK(std::fabs(got - want) < 1e-9);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("canonical monotone table is monotone in each input") {
  const FISNode node = canonical_monotone_node();
  const int n = 21;
  for (int i = 0; i < n; ++i) {
    double prev = -1.0;
    for (int j = 0; j < n; ++j) {
      const double v = infer(node, j / double(n - 1), i / double(n - 1));
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("inference is continuous") {
  const FISNode node = canonical_monotone_node();
  const double eps = 1e-4;
  for (int k = 0; k < 200; ++k) {
    const double x = k / 200.0;
    CHECK(std::fabs(infer(node, x + eps, 0.4) - infer(node, x, 0.4)) < 1e-2);
    CHECK(std::fabs(infer(node, 0.7, x + eps) - infer(node, 0.7, x)) < 1e-2);
  }
}

TEST_CASE("normalize_features clamps and flags") {
  FeatureNorms norms;
  norms.ranges = {{0.0, 10.0}, {-1.0, 1.0}};
  {
    const auto nf = normalize_features({0.0, -1.0}, norms);
    CHECK(nf.values[0] == 0.0);
    CHECK(nf.values[1] == 0.0);
    CHECK_FALSE(nf.clamped);
  }
  {
    const auto nf = normalize_features({10.0, 1.0}, norms);
    CHECK(nf.values[0] == 1.0);
    CHECK(nf.values[1] == 1.0);
    CHECK_FALSE(nf.clamped);
  }
  {
    const auto nf = normalize_features({12.0, 0.0}, norms);
    CHECK(nf.values[0] == 1.0);
    CHECK(nf.clamped);
  }
  CHECK_THROWS_AS(normalize_features({1.0}, norms), DomainError);
  FeatureNorms unfitted;
  CHECK_THROWS_AS(normalize_features({1.0}, unfitted), DomainError);
}

TEST_CASE("norm fitting handles constant features") {
  const auto norms = FeatureNorms::fit({{1.0, 5.0}, {2.0, 5.0}});
  CHECK(norms.fitted());
  const auto nf = normalize_features({1.5, 5.0}, norms);
  CHECK(nf.values[1] == 0.0);
}

TEST_CASE("single-leaf tree grades the feature directly") {
  FuzzyTree tree = FuzzyTree::make_default("camera", -1, {"only"});
  tree.norms.ranges = {{0.0, 1.0}};
  CHECK(evaluate_tree(tree, {0.9}).label.grade == Grade::Good);
  CHECK(evaluate_tree(tree, {0.1}).label.grade == Grade::Poor);
  CHECK(evaluate_tree(tree, {0.5}).label.grade == Grade::Moderate);
  CHECK(evaluate_tree(tree, {0.9}).node_scores.empty());
}

TEST_CASE("all-good tree grades good for any input") {
  FuzzyTree tree = FuzzyTree::make_default("radar", 0, {"a", "b", "c", "d", "e"});
  for (auto& node : tree.nodes) node.rules.fill(2);
  tree.norms.ranges.assign(5, {0.0, 1.0});
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> f;
    for (int k = 0; k < 5; ++k) f.push_back(rng.next_double());
    const auto ev = evaluate_tree(tree, f);
    CHECK(ev.label.grade == Grade::Good);
  }
  CHECK(tree.nodes.size() == 4);  // 5 leaves -> 4 nodes
}

TEST_CASE("tree evaluation rejects dimension mismatch") {
  FuzzyTree tree = FuzzyTree::make_default("radar", 0, {"a", "b"});
  tree.norms.ranges.assign(2, {0.0, 1.0});
  CHECK_THROWS_AS(evaluate_tree(tree, {0.5}), DomainError);
}

TEST_CASE("monotone tree is monotone in a single feature sweep") {
  FuzzyTree tree = FuzzyTree::make_default("lidar", 3, {"a", "b", "c"});
  tree.norms.ranges.assign(3, {0.0, 1.0});
  double prev = -1.0;
  for (int k = 0; k <= 40; ++k) {
    const double x = k / 40.0;
    const auto ev = evaluate_tree(tree, {x, x, x});
    CHECK(ev.label.score >= prev - 1e-12);
    prev = ev.label.score;
  }
}

TEST_CASE("model json round trip and version gate") {
  FuzzyModel model;
  FuzzyTree tree = FuzzyTree::make_default("camera", -1, {"brightness", "contrast", "sharpness"});
  tree.norms.ranges.assign(3, {0.0, 2.0});
  tree.nodes[0].input1.peaks = {0.1, 0.4, 0.8};
  tree.nodes[0].rules[4] = 2;
  model.trees.push_back(tree);

  nlohmann::json j = model;
  const FuzzyModel back = j.get<FuzzyModel>();
  REQUIRE(back.trees.size() == 1);
  CHECK(back.trees[0].sensor == "camera");
  CHECK(back.trees[0].nodes[0].input1.peaks == tree.nodes[0].input1.peaks);
  CHECK(back.trees[0].nodes[0].rules == tree.nodes[0].rules);
  // Same scores after the round trip.
  const std::vector<double> f{1.0, 0.3, 1.7};
  CHECK(evaluate_tree(back.trees[0], f).label.score ==
        evaluate_tree(tree, f).label.score);

  j["format_version"] = 99;
  CHECK_THROWS_AS(j.get<FuzzyModel>(), IoError);
}
