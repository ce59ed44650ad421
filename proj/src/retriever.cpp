#include "lt/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "lt/error.hpp"
#include "lt/provider.hpp"

namespace lt {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVector();
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

ReferenceIndex::ReferenceIndex(std::vector<ReferencePair> refs) : refs_(std::move(refs)) {
  complete_ = std::all_of(refs_.begin(), refs_.end(), [](const ReferencePair& r) { return r.embedding.has_value(); });
}

bool ReferenceIndex::ensure_embeddings(Embedder& embedder) {
  std::lock_guard lock(mu_);
  if (complete_) return false;
  bool computed = false;
  for (auto& r : refs_) {
    if (r.embedding) continue;
    r.embedding = embedder.embed(r.plsql_source).values;
    computed = true;
  }
  complete_ = true;
  return computed;
}

std::vector<RetrievedExemplar> rank_references(std::span<const double> query, const std::vector<ReferencePair>& refs,
                                               std::size_t k) {
  struct Scored {
    double score;
    const ReferencePair* pair;
  };
  std::vector<Scored> scored;
  scored.reserve(refs.size());
  for (const auto& r : refs) {
    if (!r.embedding) throw InvalidValue("reference " + r.id + " has no embedding");
    scored.push_back({cosine_similarity(query, *r.embedding), &r});
  }
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    [](const Scored& a, const Scored& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.pair->id < b.pair->id;
                    });
  std::vector<RetrievedExemplar> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({*scored[i].pair, scored[i].score, static_cast<int>(i) + 1});
  return out;
}

std::vector<RetrievedExemplar> retrieve_top_k(const SampleUnit& query, ReferenceIndex& index, std::size_t k,
                                              Embedder& embedder) {
  if (k == 0) throw InvalidValue("k must be positive");
  if (index.size() == 0) throw InvalidValue("reference set is empty");
  index.ensure_embeddings(embedder);
  auto q = embedder.embed(query.plsql_source);
  return rank_references(q.values, index.pairs(), k);
}

namespace {

int grade_of(const RelevanceJudgments& j, const std::string& id) {
  auto it = j.graded.find(id);
  return it == j.graded.end() ? 0 : std::max(it->second, 0);
}

}  // namespace

double ndcg_at_k(const std::vector<std::string>& ranked, const RelevanceJudgments& j, std::size_t k) {
  if (k == 0) throw InvalidValue("k must be positive");
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    dcg += grade_of(j, ranked[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> ideal;
  for (const auto& [id, g] : j.graded) ideal.push_back(std::max(g, 0));
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  }
  if (idcg == 0.0) return 0.0;
  return dcg / idcg;
}

double mrr_at_k(const std::vector<std::string>& ranked, const RelevanceJudgments& j, std::size_t k) {
  if (k == 0) throw InvalidValue("k must be positive");
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    if (grade_of(j, ranked[i]) > 0) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double recall_at_k(const std::vector<std::string>& ranked, const RelevanceJudgments& j, std::size_t k) {
  return mrr_at_k(ranked, j, k) > 0.0 ? 1.0 : 0.0;
}

RetrievalMetrics mean_retrieval_metrics(const std::vector<std::vector<std::string>>& rankings,
                                        const std::vector<RelevanceJudgments>& judgments, std::size_t k) {
  if (rankings.size() != judgments.size()) throw InvalidValue("rankings and judgments differ in length");
  RetrievalMetrics m;
  m.queries = rankings.size();
  if (m.queries == 0) return m;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    m.ndcg += ndcg_at_k(rankings[i], judgments[i], k);
    m.mrr += mrr_at_k(rankings[i], judgments[i], k);
    m.recall += recall_at_k(rankings[i], judgments[i], k);
  }
  const double n = static_cast<double>(m.queries);
  m.ndcg /= n;
  m.mrr /= n;
  m.recall /= n;
  return m;
}

std::vector<RelevanceJudgments> load_qrels(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw MissingFile(path.string());
  std::ifstream in(path);
  std::vector<RelevanceJudgments> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    RelevanceJudgments j;
    try {
      auto doc = nlohmann::json::parse(line);
      j.query_id = doc.at("query_id").get<std::string>();
      for (const auto& [id, grade] : doc.at("graded").items()) {
        int g = grade.get<int>();
        if (g < 0) throw InvalidValue("negative grade for " + id);
        j.graded[id] = g;
      }
    } catch (const nlohmann::json::exception& e) {
      throw MalformedLine(line_no, e.what());
    } catch (const InvalidValue& e) {
      throw MalformedLine(line_no, e.what());
    }
    if (!seen.insert(j.query_id).second) throw DuplicateId(j.query_id);
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace lt
