// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "recnas/data.hpp"
#include "recnas/metrics.hpp"
#include "support/oracles.hpp"

using namespace recnas;

TEST_CASE("hit ratio and NDCG") {
  // Target at index 2 with the highest score ranks first.
  const std::vector<double> scores{0.1, 0.5, 0.9, 0.3};
  CHECK(rank_of(scores, 2) == 1);
  CHECK(hr_at_k(scores, 2, 1) == 1.0);
  CHECK(ndcg_at_k(scores, 2, 5) == 1.0);
  CHECK(hr_at_rank(6, 5) == 0.0);
  CHECK(ndcg_at_rank(3, 5) == 0.5);
  CHECK(ndcg_at_rank(6, 5) == 0.0);
  // Equal scores: earlier candidates rank ahead.
  const std::vector<double> tied{0.5, 0.5, 0.5};
  CHECK(rank_of(tied, 0) == 1);
  CHECK(rank_of(tied, 2) == 3);
  CHECK_THROWS_AS(rank_of(tied, 3), MetricError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(20);
    for (auto& v : s) v = std::round(u(rng) * 10.0);
    const std::size_t target = trial % 20;
    for (std::size_t k = 1; k < 20; ++k) {
      CHECK(hr_at_k(s, target, k) <= hr_at_k(s, target, k + 1));
      CHECK(ndcg_at_k(s, target, k) <= hr_at_k(s, target, k));
    }
  }
}

TEST_CASE("AUC") {
  const std::vector<double> s{0.9, 0.1};
  const std::vector<std::int64_t> y{1, 0};
  CHECK(auc(s, y) == 1.0);
  const std::vector<double> flat(6, 0.3);
  const std::vector<std::int64_t> mixed{1, 0, 1, 0, 0, 1};
  CHECK(auc(flat, mixed) == 0.5);
  const std::vector<std::int64_t> one_class(6, 1);
  CHECK_THROWS_AS(auc(flat, one_class), MetricError);

  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> coarse(0, 50);
  std::bernoulli_distribution coin(0.4);
  std::vector<double> scores(1000);
  std::vector<std::int64_t> labels(1000);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = coarse(rng) / 7.0;
    labels[i] = coin(rng);
  }
  const double fast = auc(scores, labels);
  CHECK(fast == testing::brute_force_auc(scores, labels));
  // Strictly increasing transform and instance permutation leave AUC alone.
  std::vector<double> transformed(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) transformed[i] = std::exp(3.0 * scores[i]) - 2.0;
  CHECK(auc(transformed, labels) == fast);
  std::vector<std::size_t> perm(scores.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> ps;
  std::vector<std::int64_t> pl;
  for (auto i : perm) {
    ps.push_back(scores[i]);
    pl.push_back(labels[i]);
  }
  CHECK(auc(ps, pl) == fast);
}

TEST_CASE("log loss") {
  const std::vector<double> z{0.0, 20.0};
  const std::vector<std::int64_t> y{1, 1};
  CHECK(log_loss(std::span(z).first(1), std::span(y).first(1)) == doctest::Approx(std::log(2.0)));
  CHECK(log_loss(std::span(z).last(1), std::span(y).last(1)) < 1e-8);
}

TEST_CASE("leave-one-out split") {
  const std::vector<ItemSequence> seqs{{1, 2, 3, 4, 5}, {7, 8}, {4, 5, 6}};
  const SequenceSplit split = leave_one_out_split(seqs);
  CHECK(split.users == std::vector<std::size_t>{0, 2});
  CHECK(split.train[0] == ItemSequence{1, 2, 3});
  CHECK(split.validation[0].target == 4);
  CHECK(split.validation[0].history == ItemSequence{1, 2, 3});
  CHECK(split.test[0].target == 5);
  CHECK(split.test[0].history == ItemSequence{1, 2, 3, 4});
  CHECK(split.train[1] == ItemSequence{4});
  CHECK(split.validation[1].target == 5);
  CHECK(split.test[1].target == 6);
  for (const auto& ex : split.test) CHECK(ex.user != 1);
  CHECK(leave_one_out_split(seqs, 5).users == std::vector<std::size_t>{0});
  CHECK_THROWS(leave_one_out_split(seqs, 2));
}

TEST_CASE("negative sampling") {
  Rng rng(3);
  const std::vector<std::int64_t> universe{1, 2, 3, 4, 5};
  auto forced = sample_negatives(universe, {3}, 4, rng);
  std::sort(forced.begin(), forced.end());
  CHECK(forced == std::vector<std::int64_t>{1, 2, 4, 5});
  CHECK_THROWS(sample_negatives(universe, {3}, 5, rng));

  Rng a(9), b(9);
  CHECK(sample_negatives(200, {0, 1}, 100, a) == sample_negatives(200, {0, 1}, 100, b));
  const auto many = sample_negatives(200, {0, 1}, 100, a);
  CHECK(std::set<std::int64_t>(many.begin(), many.end()).size() == 100);
  for (auto id : many) CHECK(id > 1);

  // Single draws over 10 items: chi-square with 9 dof well under 3 sigma.
  std::vector<double> counts(10, 0.0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) counts[sample_negatives(10, {}, 1, rng)[0]] += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
  CHECK(chi2 < 9.0 + 3.0 * std::sqrt(18.0));
}

TEST_CASE("planted CTR generator") {
  Rng rng(4);
  const auto g = balanced_sign_table(8, rng);
  for (std::size_t i = 0; i < 8; ++i) {
    int row = 0, col = 0;
    for (std::size_t j = 0; j < 8; ++j) {
      row += g[i][j];
      col += g[j][i];
      CHECK(std::abs(g[i][j]) == 1);
    }
    CHECK(row == 0);
    CHECK(col == 0);
  }
  CHECK(solve_beta(0.8, 0.0) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const double beta_noisy = solve_beta(0.8, 0.5);
  CHECK(beta_noisy > std::log(4.0));
  CHECK(planted_bayes_auc(beta_noisy, 0.5) == doctest::Approx(0.8).epsilon(1e-9));
  // Monte Carlo check of the quadrature.
  std::normal_distribution<double> n01;
  double mc = 0.0;
  for (int i = 0; i < 200000; ++i) mc += 1.0 / (1.0 + std::exp(-(1.2 + 0.8 * n01(rng))));
  CHECK(planted_bayes_auc(1.2, 0.8) == doctest::Approx(mc / 200000.0).epsilon(3e-3));

  CtrSyntheticSpec spec;
  spec.train_rows = 100000;
  spec.validation_rows = 10;
  spec.test_rows = 10;
  spec.seed = 5;
  const CtrSynthetic data = generate_planted_ctr(spec);
  CHECK(data.bayes_auc == doctest::Approx(0.8));
  const auto [a, b] = data.planted;
  std::vector<std::int64_t> labels;
  std::vector<double> oracle;
  std::vector<std::size_t> pair_key;
  for (const auto& r : data.train) {
    labels.push_back(r.label);
    oracle.push_back(data.table[r.non_seq[a][0]][r.non_seq[b][0]]);
    pair_key.push_back(static_cast<std::size_t>(r.non_seq[a][0] * 8 + r.non_seq[b][0]));
  }
  CHECK(auc(oracle, labels) == doctest::Approx(0.8).epsilon(0.01));
  const double pair_mi = empirical_mutual_information(pair_key, labels);
  for (std::size_t f = 0; f < spec.fields; ++f) {
    std::vector<std::size_t> single;
    for (const auto& r : data.train) single.push_back(static_cast<std::size_t>(r.non_seq[f][0]));
    CHECK(pair_mi > 10.0 * empirical_mutual_information(single, labels));
  }
  double base_rate = 0.0;
  for (auto y : labels) base_rate += static_cast<double>(y);
  CHECK(base_rate / static_cast<double>(labels.size()) == doctest::Approx(0.5).epsilon(0.02));

  SUBCASE("no signal") {
    CtrSyntheticSpec flat = spec;
    flat.beta = 0.0;
    flat.train_rows = 20000;
    const CtrSynthetic d = generate_planted_ctr(flat);
    std::vector<std::int64_t> y;
    std::vector<double> s;
    for (const auto& r : d.train) {
      y.push_back(r.label);
      s.push_back(d.table[r.non_seq[d.planted.first][0]][r.non_seq[d.planted.second][0]]);
    }
    CHECK(auc(s, y) == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("deterministic given the seed") {
    CtrSyntheticSpec small = spec;
    small.train_rows = 50;
    CHECK(generate_planted_ctr(small).train == generate_planted_ctr(small).train);
  }
}

TEST_CASE("Markov sequence generator") {
  MarkovSyntheticSpec spec;
  spec.users = 2000;
  spec.items = 50;
  spec.noise = 0.1;
  spec.seed = 6;
  const MarkovSynthetic data = generate_markov(spec);
  CHECK(data.sequences.size() == 2000);
  CHECK(data.bayes_hr1 == doctest::Approx(0.9 + 0.1 / 50.0));
  // Empirical successor accuracy approaches the Bayes rate.
  double hits = 0.0, total = 0.0;
  std::map<std::int64_t, double> popularity;
  for (const auto& seq : data.sequences) {
    CHECK(seq.size() >= spec.min_length);
    CHECK(seq.size() <= spec.max_length);
    for (std::size_t t = 1; t < seq.size(); ++t) {
      hits += seq[t] == data.successor[seq[t - 1]];
      total += 1.0;
      popularity[seq[t]] += 1.0;
    }
  }
  CHECK(hits / total == doctest::Approx(data.bayes_hr1).epsilon(0.02));
  // The most popular item explains few transitions.
  double top = 0.0;
  for (const auto& [id, c] : popularity) top = std::max(top, c);
  CHECK(top / total < 0.1);

  const auto records = sequences_to_instances(data.sequences);
  CHECK(instances_to_sequences(records) == data.sequences);
  CHECK(records[0].label == data.sequences[0].back());
}
