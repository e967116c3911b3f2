// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace recnas {

using nlohmann::json;

SequenceSplit leave_one_out_split(std::span<const ItemSequence> sequences, std::size_t min_length) {
  if (min_length < 3) throw std::invalid_argument("leave-one-out needs sequences of length >= 3");
  SequenceSplit split;
  for (std::size_t u = 0; u < sequences.size(); ++u) {
    const ItemSequence& seq = sequences[u];
    if (seq.size() < min_length) continue;
    const std::size_t n = seq.size();
    split.users.push_back(u);
    split.train.emplace_back(seq.begin(), seq.end() - 2);
    split.validation.push_back({u, ItemSequence(seq.begin(), seq.end() - 2), seq[n - 2]});
    split.test.push_back({u, ItemSequence(seq.begin(), seq.end() - 1), seq[n - 1]});
  }
  return split;
}

std::vector<std::int64_t> sample_negatives(std::span<const std::int64_t> universe,
                                           const std::unordered_set<std::int64_t>& exclusions,
                                           std::size_t n, Rng& rng) {
  std::vector<std::int64_t> pool;
  std::unordered_set<std::int64_t> seen;
  for (auto id : universe)
    if (!exclusions.count(id) && seen.insert(id).second) pool.push_back(id);
  if (pool.size() < n)
    throw std::invalid_argument("only " + std::to_string(pool.size()) + " candidates for " +
                                std::to_string(n) + " negatives");
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(n);
  return pool;
}

std::vector<std::int64_t> sample_negatives(std::size_t num_items,
                                           const std::unordered_set<std::int64_t>& exclusions,
                                           std::size_t n, Rng& rng) {
  std::size_t excluded = 0;
  for (auto id : exclusions)
    if (id >= 0 && static_cast<std::size_t>(id) < num_items) ++excluded;
  if (num_items - excluded < n)
    throw std::invalid_argument("not enough items to sample " + std::to_string(n) + " negatives");
  // Rejection sampling stays cheap while the pool is mostly free.
  if (2 * (n + excluded) <= num_items) {
    std::uniform_int_distribution<std::int64_t> pick(0, static_cast<std::int64_t>(num_items) - 1);
    std::vector<std::int64_t> out;
    std::unordered_set<std::int64_t> taken;
    while (out.size() < n) {
      const std::int64_t id = pick(rng);
      if (exclusions.count(id) || !taken.insert(id).second) continue;
      out.push_back(id);
    }
    return out;
  }
  std::vector<std::int64_t> universe(num_items);
  std::iota(universe.begin(), universe.end(), 0);
  return sample_negatives(universe, exclusions, n, rng);
}

// ---------------------------------------------------------------------------

json CtrSyntheticSpec::to_json() const {
  return {{"kind", "planted-interaction-ctr"},
          {"train_rows", train_rows},
          {"validation_rows", validation_rows},
          {"test_rows", test_rows},
          {"fields", fields},
          {"cardinality", cardinality},
          {"target_auc", target_auc},
          {"beta", beta},
          {"noise_sd", noise_sd},
          {"seed", seed}};
}

CtrSyntheticSpec CtrSyntheticSpec::from_json(const json& j) {
  CtrSyntheticSpec s;
  s.train_rows = j.value("train_rows", s.train_rows);
  s.validation_rows = j.value("validation_rows", s.validation_rows);
  s.test_rows = j.value("test_rows", s.test_rows);
  s.fields = j.value("fields", s.fields);
  s.cardinality = j.value("cardinality", s.cardinality);
  s.target_auc = j.value("target_auc", s.target_auc);
  s.beta = j.value("beta", s.beta);
  s.noise_sd = j.value("noise_sd", s.noise_sd);
  s.seed = j.value("seed", s.seed);
  return s;
}

std::vector<std::vector<int>> balanced_sign_table(std::size_t n, Rng& rng) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("sign table needs an even size >= 2");
  std::vector<std::vector<int>> g(n, std::vector<int>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g[i][j] = (i + j) % 2 == 0 ? 1 : -1;
  // Flipping a 2x2 alternating minor keeps every row and column sum.
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t step = 0; step < 50 * n * n; ++step) {
    const std::size_t r1 = pick(rng), r2 = pick(rng), c1 = pick(rng), c2 = pick(rng);
    if (r1 == r2 || c1 == c2) continue;
    if (g[r1][c1] == g[r2][c2] && g[r1][c2] == g[r2][c1] && g[r1][c1] == -g[r1][c2]) {
      g[r1][c1] = -g[r1][c1];
      g[r2][c2] = -g[r2][c2];
      g[r1][c2] = -g[r1][c2];
      g[r2][c1] = -g[r2][c1];
    }
  }
  return g;
}

double planted_bayes_auc(double beta, double noise_sd) {
  auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  if (noise_sd <= 0.0) return sigmoid(beta);
  // Balanced +-1 scores: AUC = P(y = 1 | g = +1) = E[sigmoid(beta + eps)].
  const int n = 4000;
  const double lo = -10.0, hi = 10.0, h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + h * i;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    acc += w * std::exp(-0.5 * z * z) * sigmoid(beta + noise_sd * z);
  }
  return acc * h / std::sqrt(2.0 * std::numbers::pi);
}

double solve_beta(double target_auc, double noise_sd) {
  if (!(target_auc > 0.5 && target_auc < 1.0))
    throw std::invalid_argument("target AUC must lie in (0.5, 1)");
  double lo = 0.0, hi = 1.0;
  while (planted_bayes_auc(hi, noise_sd) < target_auc) {
    hi *= 2.0;
    if (hi > 1e6) throw std::invalid_argument("target AUC unreachable at this noise level");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (planted_bayes_auc(mid, noise_sd) < target_auc ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

std::string field_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "F%02zu", i);
  return buf;
}

}  // namespace

CtrSynthetic generate_planted_ctr(const CtrSyntheticSpec& spec) {
  if (spec.fields < 2) throw std::invalid_argument("planted interaction needs two fields");
  Rng rng(mix_seed(spec.seed, 0xC7));
  CtrSynthetic out;
  std::vector<FieldSchema> fields;
  for (std::size_t f = 0; f < spec.fields; ++f)
    fields.push_back({field_name(f), spec.cardinality, Valence::kUnivalent, FieldGroup::kNonSequential});
  out.schema = DatasetSchema(fields);

  std::uniform_int_distribution<std::size_t> pick_field(0, spec.fields - 1);
  std::size_t a = pick_field(rng), b = pick_field(rng);
  while (b == a) b = pick_field(rng);
  out.planted = {std::min(a, b), std::max(a, b)};
  out.table = balanced_sign_table(spec.cardinality, rng);
  out.beta = spec.beta >= 0.0 ? spec.beta : solve_beta(spec.target_auc, spec.noise_sd);
  out.bayes_auc = planted_bayes_auc(out.beta, spec.noise_sd);

  std::uniform_int_distribution<std::int64_t> pick_value(0, static_cast<std::int64_t>(spec.cardinality) - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto make_rows = [&](std::size_t count, std::vector<Instance>& rows) {
    rows.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
      Instance inst;
      for (std::size_t f = 0; f < spec.fields; ++f) inst.non_seq.push_back({pick_value(rng)});
      const int g = out.table[inst.non_seq[out.planted.first][0]][inst.non_seq[out.planted.second][0]];
      const double eps = spec.noise_sd > 0.0 ? spec.noise_sd * noise(rng) : 0.0;
      const double p = 1.0 / (1.0 + std::exp(-(out.beta * g + eps)));
      inst.label = unit(rng) < p ? 1 : 0;
      rows.push_back(std::move(inst));
    }
  };
  make_rows(spec.train_rows, out.train);
  make_rows(spec.validation_rows, out.validation);
  make_rows(spec.test_rows, out.test);
  return out;
}

// ---------------------------------------------------------------------------

json MarkovSyntheticSpec::to_json() const {
  return {{"kind", "markov-seq"}, {"users", users},           {"items", items},
          {"min_length", min_length}, {"max_length", max_length}, {"noise", noise},
          {"seed", seed}};
}

MarkovSyntheticSpec MarkovSyntheticSpec::from_json(const json& j) {
  MarkovSyntheticSpec s;
  s.users = j.value("users", s.users);
  s.items = j.value("items", s.items);
  s.min_length = j.value("min_length", s.min_length);
  s.max_length = j.value("max_length", s.max_length);
  s.noise = j.value("noise", s.noise);
  s.seed = j.value("seed", s.seed);
  return s;
}

MarkovSynthetic generate_markov(const MarkovSyntheticSpec& spec) {
  if (spec.items < 2 || spec.min_length < 1 || spec.max_length < spec.min_length)
    throw std::invalid_argument("invalid markov-seq sizes");
  if (spec.noise < 0.0 || spec.noise > 1.0) throw std::invalid_argument("noise must lie in [0, 1]");
  Rng rng(mix_seed(spec.seed, 0x3A));
  MarkovSynthetic out;
  out.schema = DatasetSchema({{"item", spec.items, Valence::kUnivalent, FieldGroup::kBehavior}});
  out.successor.resize(spec.items);
  std::iota(out.successor.begin(), out.successor.end(), 0);
  std::shuffle(out.successor.begin(), out.successor.end(), rng);
  // Predicting the successor is right w.p. (1 - noise) + noise / items.
  out.bayes_hr1 = (1.0 - spec.noise) + spec.noise / static_cast<double>(spec.items);

  std::uniform_int_distribution<std::int64_t> pick_item(0, static_cast<std::int64_t>(spec.items) - 1);
  std::uniform_int_distribution<std::size_t> pick_len(spec.min_length, spec.max_length);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t u = 0; u < spec.users; ++u) {
    ItemSequence seq{pick_item(rng)};
    const std::size_t len = pick_len(rng);
    while (seq.size() < len)
      seq.push_back(unit(rng) < spec.noise ? pick_item(rng) : out.successor[seq.back()]);
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

std::vector<Instance> sequences_to_instances(std::span<const ItemSequence> sequences) {
  std::vector<Instance> out;
  for (const auto& seq : sequences) {
    if (seq.empty()) throw std::invalid_argument("empty item sequence");
    Instance inst;
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) inst.behavior.push_back({{seq[t]}});
    inst.label = seq.back();
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<ItemSequence> instances_to_sequences(std::span<const Instance> instances) {
  std::vector<ItemSequence> out;
  for (const auto& inst : instances) {
    ItemSequence seq;
    for (const auto& el : inst.behavior) {
      if (el.empty() || el[0].size() != 1)
        throw SchemaError("next-item records need one item id per behavior element");
      seq.push_back(el[0][0]);
    }
    seq.push_back(inst.label);
    out.push_back(std::move(seq));
  }
  return out;
}

double empirical_mutual_information(std::span<const std::size_t> keys,
                                    std::span<const std::int64_t> labels) {
  if (keys.size() != labels.size() || keys.empty()) throw std::invalid_argument("MI: bad input");
  std::map<std::size_t, std::array<double, 2>> joint;
  std::array<double, 2> marginal{0.0, 0.0};
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const int y = labels[i] != 0 ? 1 : 0;
    joint[keys[i]][y] += 1.0;
    marginal[y] += 1.0;
  }
  const double n = static_cast<double>(keys.size());
  double mi = 0.0;
  for (const auto& [key, counts] : joint) {
    const double pk = (counts[0] + counts[1]) / n;
    for (int y = 0; y < 2; ++y) {
      if (counts[y] == 0.0) continue;
      const double pxy = counts[y] / n;
      mi += pxy * std::log(pxy / (pk * marginal[y] / n));
    }
  }
  return mi;
}

}  // namespace recnas
