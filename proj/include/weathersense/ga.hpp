#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "weathersense/fuzzy.hpp"
#include "weathersense/labeling.hpp"
#include "weathersense/rng.hpp"

namespace weathersense {

// ---------------------------------------------------------------------------
// Chromosome
// ---------------------------------------------------------------------------

// Per FIS node: 6 real genes (three MF peaks per input) and 9 integer genes
// (rule consequents), concatenated over the nodes of one tree.
struct Chromosome {
  int node_count = 0;
  std::vector<double> reals;  // node_count * 6, in [0, 1]
  std::vector<int> rules;     // node_count * 9, in {0, 1, 2}

  bool operator==(const Chromosome&) const = default;
};

inline Chromosome encode_chromosome(const FuzzyTree& tree) {
  Chromosome ch;
  ch.node_count = static_cast<int>(tree.nodes.size());
  for (const auto& node : tree.nodes) {
    for (double p : node.input1.peaks) ch.reals.push_back(p);
    for (double p : node.input2.peaks) ch.reals.push_back(p);
    for (int r : node.rules) ch.rules.push_back(r);
  }
  return ch;
}

// Writes the genes into a copy of the template tree (topology, feature
// names and norms are not evolved).
inline FuzzyTree decode_chromosome(const Chromosome& ch, const FuzzyTree& tree_template) {
  if (ch.node_count != static_cast<int>(tree_template.nodes.size())) {
    throw DomainError("decode_chromosome: node count mismatch");
  }
  FuzzyTree tree = tree_template;
  for (int n = 0; n < ch.node_count; ++n) {
    FISNode& node = tree.nodes[n];
    for (int i = 0; i < 3; ++i) node.input1.peaks[i] = ch.reals[n * 6 + i];
    for (int i = 0; i < 3; ++i) node.input2.peaks[i] = ch.reals[n * 6 + 3 + i];
    for (int i = 0; i < 9; ++i) node.rules[i] = ch.rules[n * 9 + i];
  }
  return tree;
}

// Clamp reals into [0, 1], sort each input's peak triple ascending and snap
// integer genes into range. Idempotent.
inline Chromosome repair(Chromosome ch) {
  for (double& g : ch.reals) g = clamp01(g);
  for (int n = 0; n < ch.node_count; ++n) {
    std::sort(ch.reals.begin() + n * 6, ch.reals.begin() + n * 6 + 3);
    std::sort(ch.reals.begin() + n * 6 + 3, ch.reals.begin() + n * 6 + 6);
  }
  for (int& r : ch.rules) r = std::clamp(r, 0, 2);
  return ch;
}

// ---------------------------------------------------------------------------
// Fitness
// ---------------------------------------------------------------------------

// Mean absolute error between tree score and the grade's target score, plus
// a flat penalty per misclassified grade. The continuous term keeps the
// landscape informative where grade accuracy alone would plateau.
inline constexpr double kMisclassPenalty = 0.5;

struct FitnessContext {
  FuzzyTree tree_template;
  std::vector<std::vector<double>> normalized_features;  // per sample
  std::vector<Grade> grades;
  std::vector<double> targets;
};

inline FitnessContext make_fitness_context(const FuzzyTree& tree_template,
                                           const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw DomainError("fitness: empty dataset");
  FitnessContext ctx;
  ctx.tree_template = tree_template;
  for (const auto& s : samples) {
    ctx.normalized_features.push_back(normalize_features(s.features, tree_template.norms).values);
    ctx.grades.push_back(s.label.grade);
    ctx.targets.push_back(label_target_score(s.label.grade));
  }
  return ctx;
}

inline double fitness(const Chromosome& ch, const FitnessContext& ctx) {
  const FuzzyTree tree = decode_chromosome(ch, ctx.tree_template);
  double total = 0.0;
  for (std::size_t i = 0; i < ctx.normalized_features.size(); ++i) {
    const TreeEvaluation ev = evaluate_tree_normalized(tree, ctx.normalized_features[i]);
    total += std::fabs(ev.label.score - ctx.targets[i]);
    if (ev.label.grade != ctx.grades[i]) total += kMisclassPenalty;
  }
  return total / static_cast<double>(ctx.normalized_features.size());
}

inline double fitness(const Chromosome& ch, const FuzzyTree& tree_template,
                      const std::vector<LabeledSample>& samples) {
  return fitness(ch, make_fitness_context(tree_template, samples));
}

// ---------------------------------------------------------------------------
// Evolution
// ---------------------------------------------------------------------------

struct GAConfig {
  int population = 60;
  int generations = 150;
  int tournament_size = 3;
  double crossover_rate = 0.9;       // one-point on node boundaries
  double mutation_sigma = 0.05;      // Gaussian on real genes
  double mutation_int_p = 0.02;      // uniform resample per integer gene
  int elitism = 2;
  std::uint64_t seed = 1;
  int threads = 1;
  bool seed_canonical = true;  // include the monotone default in the initial population
  std::vector<Chromosome> seed_population;

  bool valid() const {
    return population >= elitism + 2 && tournament_size >= 1 && crossover_rate >= 0.0 &&
           crossover_rate <= 1.0 && mutation_int_p >= 0.0 && mutation_int_p <= 1.0 &&
           elitism >= 0 && generations >= 0;
  }
};

struct EvolveResult {
  Chromosome best;
  double best_fitness = 0.0;
  std::vector<double> history;  // best fitness per generation, non-increasing
  bool degenerate = false;      // single-grade dataset shortcut
};

inline Chromosome random_chromosome(int node_count, Rng& rng) {
  Chromosome ch;
  ch.node_count = node_count;
  ch.reals.resize(static_cast<std::size_t>(node_count) * 6);
  ch.rules.resize(static_cast<std::size_t>(node_count) * 9);
  for (double& g : ch.reals) g = rng.next_double();
  for (int& r : ch.rules) r = static_cast<int>(rng.next_below(3));
  return repair(std::move(ch));
}

// Constant-output chromosome: every rule fires the same consequent, so the
// tree scores the grade target for any input.
inline Chromosome constant_chromosome(int node_count, Grade grade) {
  FuzzyTree t;
  t.feature_names.assign(node_count + 1, "");
  t.nodes.assign(node_count, canonical_monotone_node());
  Chromosome ch = encode_chromosome(t);
  for (int& r : ch.rules) r = grade_rank(grade);
  return ch;
}

inline EvolveResult evolve(const GAConfig& config, const FuzzyTree& tree_template,
                           const std::vector<LabeledSample>& samples) {
  if (!config.valid()) throw DomainError("evolve: invalid GAConfig");
  const FitnessContext ctx = make_fitness_context(tree_template, samples);
  const int node_count = static_cast<int>(tree_template.nodes.size());

  bool single_grade = true;
  for (std::size_t i = 1; i < ctx.grades.size(); ++i) {
    if (ctx.grades[i] != ctx.grades[0]) {
      single_grade = false;
      break;
    }
  }
  if (single_grade) {
    std::cerr << "warning: single-grade dataset for " << tree_template.sensor << " bin "
              << tree_template.distance_bin << "; returning constant solution\n";
    EvolveResult res;
    res.best = constant_chromosome(node_count, ctx.grades[0]);
    res.best_fitness = fitness(res.best, ctx);
    res.history.push_back(res.best_fitness);
    res.degenerate = true;
    return res;
  }

  Rng rng = Rng(config.seed).derive(0x6741ULL);

  std::vector<Chromosome> pop;
  pop.reserve(config.population);
  if (config.seed_canonical) pop.push_back(encode_chromosome(FuzzyTree::make_default(
      tree_template.sensor, tree_template.distance_bin, tree_template.feature_names)));
  for (const auto& seeded : config.seed_population) {
    if (static_cast<int>(pop.size()) >= config.population) break;
    if (seeded.node_count == node_count) pop.push_back(repair(seeded));
  }
  while (static_cast<int>(pop.size()) < config.population) {
    pop.push_back(random_chromosome(node_count, rng));
  }

  std::vector<double> fit(pop.size(), 0.0);
  auto evaluate_all = [&]() {
    const int nthreads = std::max(1, config.threads);
    if (nthreads == 1) {
      for (std::size_t i = 0; i < pop.size(); ++i) fit[i] = fitness(pop[i], ctx);
      return;
    }
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < nthreads; ++t) {
      workers.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= pop.size()) return;
          fit[i] = fitness(pop[i], ctx);
        }
      });
    }
    for (auto& w : workers) w.join();
  };

  auto best_index = [&]() {
    std::size_t bi = 0;
    for (std::size_t i = 1; i < fit.size(); ++i) {
      if (fit[i] < fit[bi]) bi = i;
    }
    return bi;
  };

  auto tournament = [&]() -> const Chromosome& {
    std::size_t winner = rng.next_below(pop.size());
    for (int t = 1; t < config.tournament_size; ++t) {
      const std::size_t cand = rng.next_below(pop.size());
      if (fit[cand] < fit[winner]) winner = cand;
    }
    return pop[winner];
  };

  EvolveResult res;
  evaluate_all();
  {
    const std::size_t bi = best_index();
    res.best = pop[bi];
    res.best_fitness = fit[bi];
    res.history.push_back(res.best_fitness);
  }

  for (int gen = 0; gen < config.generations; ++gen) {
    // Elites first, by fitness then index for a stable order.
    std::vector<std::size_t> idx(pop.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return fit[a] != fit[b] ? fit[a] < fit[b] : a < b;
    });

    std::vector<Chromosome> next_pop;
    next_pop.reserve(pop.size());
    for (int e = 0; e < config.elitism; ++e) next_pop.push_back(pop[idx[e]]);

    while (static_cast<int>(next_pop.size()) < config.population) {
      Chromosome child = tournament();
      if (node_count > 1 && rng.next_double() < config.crossover_rate) {
        const Chromosome& other = tournament();
        const int split = 1 + static_cast<int>(rng.next_below(node_count - 1));
        for (int n = split; n < node_count; ++n) {
          for (int i = 0; i < 6; ++i) child.reals[n * 6 + i] = other.reals[n * 6 + i];
          for (int i = 0; i < 9; ++i) child.rules[n * 9 + i] = other.rules[n * 9 + i];
        }
      }
      if (config.mutation_sigma > 0.0) {
        for (double& g : child.reals) g += rng.gaussian(0.0, config.mutation_sigma);
      }
      if (config.mutation_int_p > 0.0) {
        for (int& r : child.rules) {
          if (rng.next_double() < config.mutation_int_p) r = static_cast<int>(rng.next_below(3));
        }
      }
      next_pop.push_back(repair(std::move(child)));
    }

    pop = std::move(next_pop);
    evaluate_all();
    const std::size_t bi = best_index();
    if (fit[bi] < res.best_fitness) {
      res.best_fitness = fit[bi];
      res.best = pop[bi];
    }
    res.history.push_back(res.best_fitness);
  }
  return res;
}

}  // namespace weathersense
