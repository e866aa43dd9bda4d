#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "weathersense/core_types.hpp"

namespace weathersense {

// ---------------------------------------------------------------------------
// Membership functions
// ---------------------------------------------------------------------------

// Triangular membership over [a, c] with peak b. Degenerate sides (a == b or
// b == c) behave as steps at the peak.
struct TriangularMf {
  double a = 0.0, b = 0.5, c = 1.0;

  double membership(double x) const {
    if (x == b) return 1.0;
    if (x < b) {
      if (x <= a) return 0.0;
      return (x - a) / (b - a);
    }
    if (x >= c) return 0.0;
    return (c - x) / (c - b);
  }
};

// One input variable: three MFs parameterized by their peaks. Low saturates
// to 1 below its peak and High saturates to 1 above its peak, so every value
// of the domain carries nonzero membership regardless of where the peaks sit.
struct InputBank {
  std::array<double, 3> peaks{0.0, 0.5, 1.0};  // ascending

  bool valid() const { return peaks[0] <= peaks[1] && peaks[1] <= peaks[2]; }

  std::array<double, 3> fuzzify(double x) const {
    std::array<double, 3> mu{0.0, 0.0, 0.0};
    const double b1 = peaks[0], b2 = peaks[1], b3 = peaks[2];
    // Low: shoulder on the left, falls to zero at the middle peak.
    if (x <= b1) {
      mu[0] = 1.0;
    } else if (x < b2) {
      mu[0] = (b2 - x) / (b2 - b1);
    }
    // Med: triangle spanning the neighbor peaks.
    mu[1] = TriangularMf{b1, b2, b3}.membership(x);
    // High: shoulder on the right.
    if (x >= b3) {
      mu[2] = 1.0;
    } else if (x > b2) {
      mu[2] = (x - b2) / (b3 - b2);
    }
    return mu;
  }
};

inline std::array<double, 3> fuzzify(double x, const InputBank& bank) {
  return bank.fuzzify(x);
}

// Fixed output vocabulary on [0, 1]: poor/moderate/good triangles of width
// 0.2 centered at 0.1, 0.5 and 0.9. Anchors the score scale to the grade cut
// points at 1/3 and 2/3.
inline const std::array<TriangularMf, 3>& output_mfs() {
  static const std::array<TriangularMf, 3> mfs{
      TriangularMf{0.0, 0.1, 0.2}, TriangularMf{0.4, 0.5, 0.6}, TriangularMf{0.8, 0.9, 1.0}};
  return mfs;
}

inline constexpr int kCentroidPoints = 201;  // discretization of the output domain

// ---------------------------------------------------------------------------
// FIS node
// ---------------------------------------------------------------------------

// Two-input / one-output Mamdani unit: product firing, additive aggregation
// of scaled output terms, centroid defuzzification on the discretized output
// domain. Product/sum rather than min/max: with the peak-to-peak input banks
// the rule firings form a partition of unity, which makes inference with a
// monotone rule table provably monotone in each input. Min firing with max
// aggregation does not have that property (rules like (Med, Low) -> Poor
// gain strength as the first input grows, denting the output by ~0.02).
struct FISNode {
  InputBank input1;
  InputBank input2;
  // rules[i*3 + j]: consequent (0 poor, 1 moderate, 2 good) for input1 MF i
  // and input2 MF j. Always complete.
  std::array<int, 9> rules{0, 0, 0, 0, 0, 0, 0, 0, 0};

  bool valid() const {
    if (!input1.valid() || !input2.valid()) return false;
    for (int r : rules) {
      if (r < 0 || r > 2) return false;
    }
    return true;
  }
};

// Rule table where the consequent rank is the smaller of the two antecedent
// ranks: monotone non-decreasing output in each input.
inline FISNode canonical_monotone_node() {
  FISNode node;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) node.rules[i * 3 + j] = std::min(i, j);
  }
  return node;
}

inline double infer(const FISNode& node, double x1, double x2) {
  const double u = clamp01(x1);
  const double v = clamp01(x2);
  const auto mu1 = node.input1.fuzzify(u);
  const auto mu2 = node.input2.fuzzify(v);

  // Firing strength per output term: sum of rule firings per consequent.
  std::array<double, 3> strength{0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      strength[node.rules[i * 3 + j]] += mu1[i] * mu2[j];
    }
  }

  if (strength[0] == 0.0 && strength[1] == 0.0 && strength[2] == 0.0) {
    static bool warned = false;
    if (!warned) {
      std::cerr << "warning: fuzzy inference with zero total firing, using 0.5\n";
      warned = true;
    }
    return 0.5;
  }

  const auto& omfs = output_mfs();
  double num = 0.0, den = 0.0;
  for (int k = 0; k < kCentroidPoints; ++k) {
    const double x = static_cast<double>(k) / (kCentroidPoints - 1);
    double agg = 0.0;
    for (int c = 0; c < 3; ++c) {
      agg += strength[c] * omfs[c].membership(x);
    }
    num += x * agg;
    den += agg;
  }
  return den > 0.0 ? num / den : 0.5;
}

// ---------------------------------------------------------------------------
// Feature normalization
// ---------------------------------------------------------------------------

struct FeatureNorms {
  std::vector<std::pair<double, double>> ranges;  // per-feature (min, max)

  bool fitted() const {
    if (ranges.empty()) return false;
    for (const auto& [lo, hi] : ranges) {
      if (!(lo < hi)) return false;
    }
    return true;
  }

  static FeatureNorms fit(const std::vector<std::vector<double>>& samples) {
    FeatureNorms norms;
    if (samples.empty()) return norms;
    const std::size_t k = samples[0].size();
    norms.ranges.assign(k, {1e300, -1e300});
    for (const auto& s : samples) {
      for (std::size_t i = 0; i < k && i < s.size(); ++i) {
        norms.ranges[i].first = std::min(norms.ranges[i].first, s[i]);
        norms.ranges[i].second = std::max(norms.ranges[i].second, s[i]);
      }
    }
    // Degenerate features (constant over the set) get a unit band so they
    // normalize to 0 rather than poisoning the fit.
    for (auto& [lo, hi] : norms.ranges) {
      if (!(lo < hi)) hi = lo + 1.0;
    }
    return norms;
  }
};

struct NormalizedFeatures {
  std::vector<double> values;  // in [0, 1]
  bool clamped = false;        // any raw value fell outside the fitted range
};

inline NormalizedFeatures normalize_features(const std::vector<double>& raw,
                                             const FeatureNorms& norms) {
  if (!norms.fitted() || norms.ranges.size() != raw.size()) {
    throw DomainError("normalize_features: norms not fitted for this feature count");
  }
  NormalizedFeatures out;
  out.values.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto [lo, hi] = norms.ranges[i];
    const double t = (raw[i] - lo) / (hi - lo);
    if (t < 0.0 || t > 1.0) out.clamped = true;
    out.values[i] = clamp01(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fuzzy tree
// ---------------------------------------------------------------------------

// Balanced binary reduction of the (alphabetically ordered) features: each
// level pairs adjacent values into FIS nodes, an odd trailing value is
// promoted unchanged, and the root value is the performance score.
struct FuzzyTree {
  std::string sensor;          // radar | lidar | camera
  int distance_bin = -1;       // -1 = whole-frame (camera)
  std::vector<std::string> feature_names;
  FeatureNorms norms;
  std::vector<FISNode> nodes;  // creation order, level by level

  static int node_count_for(int leaf_count) {
    return leaf_count > 1 ? leaf_count - 1 : 0;
  }

  bool topology_valid() const {
    return static_cast<int>(nodes.size()) == node_count_for(static_cast<int>(feature_names.size()));
  }

  static FuzzyTree make_default(const std::string& sensor, int distance_bin,
                                const std::vector<std::string>& feature_names) {
    FuzzyTree tree;
    tree.sensor = sensor;
    tree.distance_bin = distance_bin;
    tree.feature_names = feature_names;
    tree.nodes.assign(node_count_for(static_cast<int>(feature_names.size())),
                      canonical_monotone_node());
    return tree;
  }
};

struct TreeEvaluation {
  PerformanceLabel label;
  std::vector<double> node_scores;  // one per FIS node, evaluation order
  bool clamped = false;
};

// Evaluate on already-normalized features in [0, 1].
inline TreeEvaluation evaluate_tree_normalized(const FuzzyTree& tree,
                                               const std::vector<double>& features) {
  if (features.size() != tree.feature_names.size() || !tree.topology_valid()) {
    throw DomainError("evaluate_tree: feature count does not match tree leaves");
  }
  TreeEvaluation ev;
  if (features.empty()) throw DomainError("evaluate_tree: no features");

  std::vector<double> level;
  level.reserve(features.size());
  for (double f : features) level.push_back(clamp01(f));

  std::size_t node_idx = 0;
  while (level.size() > 1) {
    std::vector<double> next;
    next.reserve(level.size() / 2 + 1);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      const double score = infer(tree.nodes[node_idx++], level[i], level[i + 1]);
      ev.node_scores.push_back(score);
      next.push_back(score);
    }
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
  }
  ev.label = grade_from_score(level[0]);
  return ev;
}

// Evaluate on raw features using the tree's persisted norms.
inline TreeEvaluation evaluate_tree(const FuzzyTree& tree, const std::vector<double>& raw) {
  const NormalizedFeatures nf = normalize_features(raw, tree.norms);
  TreeEvaluation ev = evaluate_tree_normalized(tree, nf.values);
  ev.clamped = nf.clamped;
  return ev;
}

// ---------------------------------------------------------------------------
// Model persistence
// ---------------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

struct FuzzyModel {
  int format_version = kModelFormatVersion;
  std::vector<FuzzyTree> trees;

  const FuzzyTree* find(const std::string& sensor, int distance_bin) const {
    for (const auto& t : trees) {
      if (t.sensor == sensor && t.distance_bin == distance_bin) return &t;
    }
    return nullptr;
  }
};

inline void to_json(nlohmann::json& j, const InputBank& b) {
  j = nlohmann::json{{"peaks", b.peaks}};
}
inline void from_json(const nlohmann::json& j, InputBank& b) {
  j.at("peaks").get_to(b.peaks);
}

inline void to_json(nlohmann::json& j, const FISNode& n) {
  j = nlohmann::json{{"input1", n.input1}, {"input2", n.input2}, {"rules", n.rules}};
}
inline void from_json(const nlohmann::json& j, FISNode& n) {
  j.at("input1").get_to(n.input1);
  j.at("input2").get_to(n.input2);
  j.at("rules").get_to(n.rules);
}

inline void to_json(nlohmann::json& j, const FuzzyTree& t) {
  nlohmann::json norms = nlohmann::json::array();
  for (const auto& [lo, hi] : t.norms.ranges) norms.push_back({lo, hi});
  j = nlohmann::json{{"sensor", t.sensor},
                     {"distance_bin", t.distance_bin},
                     {"feature_names", t.feature_names},
                     {"norms", norms},
                     {"nodes", t.nodes}};
}
inline void from_json(const nlohmann::json& j, FuzzyTree& t) {
  j.at("sensor").get_to(t.sensor);
  j.at("distance_bin").get_to(t.distance_bin);
  j.at("feature_names").get_to(t.feature_names);
  t.norms.ranges.clear();
  for (const auto& r : j.at("norms")) {
    t.norms.ranges.emplace_back(r[0].get<double>(), r[1].get<double>());
  }
  j.at("nodes").get_to(t.nodes);
}

inline void to_json(nlohmann::json& j, const FuzzyModel& m) {
  j = nlohmann::json{{"format_version", m.format_version}, {"trees", m.trees}};
}
inline void from_json(const nlohmann::json& j, FuzzyModel& m) {
  j.at("format_version").get_to(m.format_version);
  if (m.format_version != kModelFormatVersion) {
    throw IoError("unsupported fuzzy model format_version " +
                  std::to_string(m.format_version));
  }
  j.at("trees").get_to(m.trees);
}

}  // namespace weathersense
