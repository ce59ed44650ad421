#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "lt/error.hpp"
#include "lt/provider.hpp"
#include "lt/retriever.hpp"
#include "test_support.hpp"

using namespace lt;

namespace {

double dot_cos(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

ReferencePair ref(const std::string& id, std::vector<double> emb) {
  return ReferencePair{id, "src " + id, "class " + id + " {}", std::move(emb)};
}

// Direct formula evaluation used as the oracle for the metric functions.
int grade(const RelevanceJudgments& j, const std::string& id) {
  auto it = j.graded.find(id);
  return it == j.graded.end() ? 0 : it->second;
}

double oracle_ndcg(const std::vector<std::string>& ranked, const RelevanceJudgments& j, std::size_t k) {
  double dcg = 0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) dcg += grade(j, ranked[i]) / std::log2(i + 2.0);
  std::vector<int> grades;
  for (const auto& [id, g] : j.graded) grades.push_back(g);
  std::sort(grades.rbegin(), grades.rend());
  double idcg = 0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) idcg += grades[i] / std::log2(i + 2.0);
  return idcg == 0 ? 0.0 : dcg / idcg;
}

double oracle_mrr(const std::vector<std::string>& ranked, const RelevanceJudgments& j, std::size_t k) {
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
    if (grade(j, ranked[i]) > 0) return 1.0 / static_cast<double>(i + 1);
  return 0.0;
}

double oracle_recall(const std::vector<std::string>& ranked, const RelevanceJudgments& j, std::size_t k) {
  return oracle_mrr(ranked, j, k) > 0 ? 1.0 : 0.0;
}

}  // namespace

TEST(Cosine, Examples) {
  std::vector<double> a{1, 0}, b{0, 1}, c{2, 0}, d{-1, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, c), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, d), -1.0);
  std::vector<double> e{1, 1};
  EXPECT_NEAR(cosine_similarity(a, e), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Cosine, Errors) {
  std::vector<double> a{1, 0}, b{1, 0, 0}, z{0, 0};
  EXPECT_THROW(cosine_similarity(a, b), DimensionMismatch);
  EXPECT_THROW(cosine_similarity(a, z), ZeroVector);
}

TEST(Cosine, SymmetricBoundedScaleInvariant) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_real_distribution<double> scale(0.01, 100);
  for (int i = 0; i < 500; ++i) {
    std::size_t n = 1 + rng() % 12;
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    double s = cosine_similarity(a, b);
    ASSERT_NEAR(s, cosine_similarity(b, a), 1e-12);
    ASSERT_LE(s, 1.0);
    ASSERT_GE(s, -1.0);
    ASSERT_NEAR(s, dot_cos(a, b), 1e-9);
    auto scaled = a;
    double f = scale(rng);
    for (auto& x : scaled) x *= f;
    ASSERT_NEAR(cosine_similarity(scaled, b), s, 1e-9);
  }
}

TEST(Ranking, TopKWithIdTieBreak) {
  std::vector<ReferencePair> refs{ref("b", {1, 0}), ref("a", {1, 0}), ref("c", {0, 1}), ref("d", {1, 1})};
  std::vector<double> q{1, 0};
  auto top = rank_references(q, refs, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].pair.id, "a");
  EXPECT_EQ(top[1].pair.id, "b");
  EXPECT_EQ(top[2].pair.id, "d");
  EXPECT_EQ(top[0].rank, 1);
  EXPECT_EQ(top[2].rank, 3);
  EXPECT_EQ(rank_references(q, refs, 10).size(), 4u);
  EXPECT_TRUE(rank_references(q, {}, 3).empty());
}

TEST(Ranking, MatchesFullSortOracle) {
  std::mt19937 rng(21);
  HashingEmbedder embedder(32);
  const std::vector<std::string> vocab{"select", "update", "loop", "cursor", "commit", "balance", "ledger", "fee"};
  auto sentence = [&] {
    std::string s;
    for (int w = 1 + rng() % 4; w > 0; --w) s += vocab[rng() % vocab.size()] + " ";
    return s;
  };
  for (int round = 0; round < 100; ++round) {
    std::vector<ReferencePair> refs;
    for (int i = 0, n = 1 + rng() % 30; i < n; ++i)
      refs.push_back({"r" + std::to_string(rng() % 1000) + "_" + std::to_string(i), sentence(), "class X {}", {}});
    ReferenceIndex index(refs);
    SampleUnit q{"q", sentence(), {}, {}};
    for (std::size_t k : {1u, 3u, 5u}) {
      auto got = retrieve_top_k(q, index, k, embedder);
      auto qv = embedder.embed(q.plsql_source).values;
      std::vector<std::pair<double, std::string>> all;
      for (const auto& r : refs) all.push_back({cosine_similarity(qv, embedder.embed(r.plsql_source).values), r.id});
      std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      ASSERT_EQ(got.size(), std::min(k, refs.size()));
      for (std::size_t i = 0; i < got.size(); ++i) {
        ASSERT_EQ(got[i].pair.id, all[i].second);
        ASSERT_EQ(got[i].score, all[i].first);
        ASSERT_EQ(got[i].rank, static_cast<int>(i + 1));
      }
    }
  }
}

TEST(Ranking, EmbeddingsAreCachedOnce) {
  struct Counting : Embedder {
    int calls = 0;
    HashingEmbedder inner{16};
    EmbeddingVector embed(std::string_view t) override {
      ++calls;
      return inner.embed(t);
    }
  } counting;
  ReferenceIndex index({{"a", "select x", "class A {}", {}}, {"b", "update y", "class B {}", {}}});
  EXPECT_TRUE(index.ensure_embeddings(counting));
  EXPECT_FALSE(index.ensure_embeddings(counting));
  EXPECT_EQ(counting.calls, 2);
  SampleUnit q{"q", "select x", {}, {}};
  auto top = retrieve_top_k(q, index, 1, counting);
  EXPECT_EQ(top.at(0).pair.id, "a");
  EXPECT_NEAR(top.at(0).score, 1.0, 1e-12);
  EXPECT_EQ(counting.calls, 3);
}

TEST(Metrics, HandExamples) {
  RelevanceJudgments j{"q", {{"r3", 1}}};
  std::vector<std::string> ranked{"r2", "r3", "r1"};
  EXPECT_NEAR(ndcg_at_k(ranked, j, 3), 1.0 / std::log2(3.0), 1e-12);
  EXPECT_DOUBLE_EQ(mrr_at_k(ranked, j, 3), 0.5);
  EXPECT_DOUBLE_EQ(recall_at_k(ranked, j, 3), 1.0);
  EXPECT_DOUBLE_EQ(recall_at_k(ranked, j, 1), 0.0);
  EXPECT_DOUBLE_EQ(mrr_at_k(ranked, j, 1), 0.0);

  RelevanceJudgments none{"q", {}};
  EXPECT_DOUBLE_EQ(ndcg_at_k(ranked, none, 3), 0.0);
  EXPECT_DOUBLE_EQ(mrr_at_k(ranked, none, 3), 0.0);

  RelevanceJudgments graded{"q", {{"a", 3}, {"b", 2}, {"c", 1}}};
  EXPECT_DOUBLE_EQ(ndcg_at_k({"a", "b", "c"}, graded, 3), 1.0);
  EXPECT_LT(ndcg_at_k({"c", "b", "a"}, graded, 3), 1.0);
}

TEST(Metrics, CorpusMeanOfTwoQueries) {
  // first query ideal, second query's only relevant ref at rank 2
  std::vector<std::vector<std::string>> rankings{{"r1", "r2", "r3"}, {"r2", "r3", "r1"}};
  std::vector<RelevanceJudgments> judgments{{"q1", {{"r1", 1}}}, {"q2", {{"r3", 1}}}};
  auto m = mean_retrieval_metrics(rankings, judgments, 3);
  EXPECT_NEAR(m.ndcg, (1.0 + 1.0 / std::log2(3.0)) / 2.0, 1e-12);
  EXPECT_NEAR(m.ndcg, 0.8155, 1e-4);
  EXPECT_DOUBLE_EQ(m.mrr, 0.75);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_EQ(m.queries, 2u);
}

TEST(Metrics, RandomizedAgainstFormulas) {
  std::mt19937 rng(99);
  for (int round = 0; round < 500; ++round) {
    std::vector<std::string> pool;
    for (int i = 0; i < 8; ++i) pool.push_back("r" + std::to_string(i));
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::string> ranked(pool.begin(), pool.begin() + rng() % 7);
    RelevanceJudgments j{"q", {}};
    for (const auto& id : pool)
      if (rng() % 3 == 0) j.graded[id] = static_cast<int>(rng() % 4);  // zero grades included
    for (std::size_t k : {1u, 3u, 5u, 10u}) {
      double n = ndcg_at_k(ranked, j, k);
      ASSERT_NEAR(n, oracle_ndcg(ranked, j, k), 1e-9);
      ASSERT_NEAR(mrr_at_k(ranked, j, k), oracle_mrr(ranked, j, k), 1e-9);
      ASSERT_NEAR(recall_at_k(ranked, j, k), oracle_recall(ranked, j, k), 1e-9);
      ASSERT_GE(n, 0.0);
      ASSERT_LE(n, 1.0 + 1e-12);
    }
    for (std::size_t k = 1; k < 8; ++k) ASSERT_LE(recall_at_k(ranked, j, k), recall_at_k(ranked, j, k + 1));
  }
}

TEST(Metrics, IdealOrderingScoresOne) {
  std::mt19937 rng(4);
  for (int round = 0; round < 200; ++round) {
    RelevanceJudgments j{"q", {}};
    std::vector<std::pair<int, std::string>> items;
    for (int i = 0; i < 6; ++i) {
      int g = static_cast<int>(rng() % 4);
      j.graded["r" + std::to_string(i)] = g;
      items.push_back({g, "r" + std::to_string(i)});
    }
    if (std::none_of(items.begin(), items.end(), [](auto& p) { return p.first > 0; })) continue;
    std::stable_sort(items.begin(), items.end(), [](auto& a, auto& b) { return a.first > b.first; });
    std::vector<std::string> ranked;
    for (auto& [g, id] : items) ranked.push_back(id);
    ASSERT_NEAR(ndcg_at_k(ranked, j, 3), 1.0, 1e-12);
  }
}

TEST(Qrels, Load) {
  auto q = load_qrels(lt_test::fixtures() / "retrieval" / "qrels.jsonl");
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[1].query_id, "q2");
  EXPECT_EQ(q[1].graded.at("r3"), 1);
}
