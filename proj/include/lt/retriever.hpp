#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "lt/model.hpp"

namespace lt {

class Embedder;

struct RetrievedExemplar {
  ReferencePair pair;
  double score = 0.0;  // cosine similarity to the query
  int rank = 0;        // 1-based
};

struct RelevanceJudgments {
  std::string query_id;
  std::map<std::string, int> graded;  // reference id -> grade; absent ids grade 0
};

/// Throws DimensionMismatch or ZeroVector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Reference set with a lazily filled embedding cache. Safe to share between
/// worker threads; the first caller computes missing embeddings.
class ReferenceIndex {
 public:
  explicit ReferenceIndex(std::vector<ReferencePair> refs);

  /// Embeds every pair lacking an embedding (PL/SQL side, since queries are
  /// PL/SQL). Returns true if any embedding was computed.
  bool ensure_embeddings(Embedder& embedder);

  const std::vector<ReferencePair>& pairs() const { return refs_; }
  std::size_t size() const { return refs_.size(); }

 private:
  std::mutex mu_;
  std::vector<ReferencePair> refs_;
  bool complete_ = false;
};

/// Top min(k, |refs|) pairs by descending cosine score; ties go to the
/// lexicographically smaller id. Every pair must carry an embedding.
std::vector<RetrievedExemplar> rank_references(std::span<const double> query,
                                               const std::vector<ReferencePair>& refs, std::size_t k);

/// Embeds the query's PL/SQL and ranks the index against it.
std::vector<RetrievedExemplar> retrieve_top_k(const SampleUnit& query, ReferenceIndex& index, std::size_t k,
                                              Embedder& embedder);

double ndcg_at_k(const std::vector<std::string>& ranked_ids, const RelevanceJudgments& judgments, std::size_t k);
double mrr_at_k(const std::vector<std::string>& ranked_ids, const RelevanceJudgments& judgments, std::size_t k);
double recall_at_k(const std::vector<std::string>& ranked_ids, const RelevanceJudgments& judgments, std::size_t k);

struct RetrievalMetrics {
  double ndcg = 0.0;
  double mrr = 0.0;
  double recall = 0.0;
  std::size_t queries = 0;
};

/// Corpus means over queries. `rankings[i]` is judged by `judgments[i]`.
RetrievalMetrics mean_retrieval_metrics(const std::vector<std::vector<std::string>>& rankings,
                                        const std::vector<RelevanceJudgments>& judgments, std::size_t k);

/// Reads `{"query_id", "graded": {ref_id: grade}}` lines.
std::vector<RelevanceJudgments> load_qrels(const std::filesystem::path& path);

}  // namespace lt
