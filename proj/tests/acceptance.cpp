// Acceptance checks, one PASS/FAIL line per criterion.
// usage: acceptance <lt-binary> <fixtures-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "lt/agents.hpp"
#include "lt/apikb.hpp"
#include "lt/evalharness.hpp"
#include "lt/java_parser.hpp"
#include "lt/model.hpp"
#include "lt/provider.hpp"
#include "lt/retriever.hpp"

using namespace lt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g_lt;
fs::path g_fixtures;

struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

class ScratchDir {
 public:
  ScratchDir() : path_(fs::temp_directory_path() / ("lt-accept-" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& n) const { return path_ / n; }

 private:
  fs::path path_;
};

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

SandboxResult lt_cli(const std::string& args) { return run_command(g_lt + " " + args, 120); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ---------------------------------------------------------------------

std::vector<RunTrace> encoded_traces(int n, int valid, int compiled, int all_pass) {
  std::vector<RunTrace> out;
  for (int i = 0; i < n; ++i) {
    RunTrace t;
    t.sample_id = "s" + std::to_string(i);
    Candidate c;
    c.java_code = "class A {}";
    c.outcome.structurally_valid = i < valid;
    c.outcome.compiled = i < compiled;
    c.outcome.tests_total = i < compiled ? 5 : 0;
    c.outcome.tests_passed = i < all_pass ? 5 : (i < compiled ? 2 : 0);
    t.candidates.push_back(c);
    out.push_back(t);
  }
  return out;
}

void criterion_metric_arithmetic(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  struct Row {
    int valid, compiled, pass;
    double sv, cr, tpr;
  };
  for (const Row& row : {Row{68, 36, 23, 100.0, 52.9, 33.8}, Row{67, 31, 21, 98.5, 45.6, 30.9}}) {
    EvalReport r = compute_report(encoded_traces(68, row.valid, row.compiled, row.pass), 68);
    std::ostringstream what;
    what << "row " << row.valid << "/" << row.compiled << "/" << row.pass << " gave " << metrics_line(r);
    c.expect(std::abs(r.sv_pct - row.sv) <= 0.05 && std::abs(r.cr_pct - row.cr) <= 0.05 &&
                 std::abs(r.tpr_pct - row.tpr) <= 0.05,
             what.str());
  }
  c.expect(seconds_since(t0) < 1.0, "slower than 1 s");
}

// ---- 2 ---------------------------------------------------------------------

void criterion_retrieval_oracle(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(2024);
  HashingEmbedder embedder(64);  // small dimension makes score ties common
  const std::vector<std::string> vocab{"select", "into", "from", "where", "update", "set", "cursor", "loop",
                                       "commit", "balance", "ledger", "fee", "rate", "account", "insert"};
  auto text = [&] {
    std::string s;
    for (int i = 1 + rng() % 5; i > 0; --i) s += vocab[rng() % vocab.size()] + " ";
    return s;
  };
  std::size_t mismatches = 0;
  for (int corpus = 0; corpus < 200; ++corpus) {
    std::vector<ReferencePair> refs;
    std::set<std::string> ids;
    for (int i = 0, n = 1 + rng() % 50; i < n; ++i) {
      std::string id;
      do id = "ref" + std::to_string(rng() % 500); while (!ids.insert(id).second);
      refs.push_back({id, text(), "class X {}", {}});
    }
    ReferenceIndex index(refs);
    SampleUnit query{"q", text(), {}, {}};
    auto qv = embedder.embed(query.plsql_source).values;
    std::vector<std::pair<double, std::string>> full;
    for (const auto& r : refs) full.push_back({cosine_similarity(qv, embedder.embed(r.plsql_source).values), r.id});
    std::sort(full.begin(), full.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    for (std::size_t k : {1u, 3u, 5u}) {
      auto got = retrieve_top_k(query, index, k, embedder);
      std::size_t want = std::min(k, refs.size());
      if (got.size() != want) {
        ++mismatches;
        continue;
      }
      for (std::size_t i = 0; i < want; ++i)
        if (got[i].pair.id != full[i].second) ++mismatches;
    }
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " mismatches against the full sort");
  c.expect(seconds_since(t0) < 10.0, "slower than 10 s");
}

// ---- 3 ---------------------------------------------------------------------

void criterion_metric_oracles(Check& c) {
  std::mt19937 rng(3);
  auto grade = [](const RelevanceJudgments& j, const std::string& id) {
    auto it = j.graded.find(id);
    return it == j.graded.end() ? 0 : it->second;
  };
  const std::size_t k = 3;
  std::size_t bad = 0;
  for (int inst = 0; inst < 100; ++inst) {
    std::vector<std::string> pool{"a", "b", "c", "d", "e", "f"};
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::string> ranked(pool.begin(), pool.begin() + rng() % 6);
    RelevanceJudgments j{"q", {}};
    int mode = inst % 4;
    if (mode == 1) {  // all-zero relevance
      for (const auto& id : pool) j.graded[id] = 0;
    } else if (mode == 2 && ranked.size() >= k) {  // single relevant item exactly at rank k
      j.graded[ranked[k - 1]] = 1;
    } else if (mode == 3 && ranked.size() > k) {  // relevant item just past the cutoff
      j.graded[ranked[k]] = 2;
    } else {
      for (const auto& id : pool)
        if (rng() % 2) j.graded[id] = static_cast<int>(rng() % 4);
    }

    double dcg = 0, idcg = 0, rr = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
      int g = grade(j, ranked[i]);
      dcg += g / std::log2(static_cast<double>(i) + 2);
      if (g > 0 && rr == 0) rr = 1.0 / static_cast<double>(i + 1);
    }
    std::vector<int> grades;
    for (const auto& [id, g] : j.graded) grades.push_back(g);
    std::sort(grades.rbegin(), grades.rend());
    for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) idcg += grades[i] / std::log2(static_cast<double>(i) + 2);
    double ndcg = idcg == 0 ? 0 : dcg / idcg;
    double hit = rr > 0 ? 1 : 0;

    if (std::abs(ndcg_at_k(ranked, j, k) - ndcg) > 1e-9) ++bad;
    if (std::abs(mrr_at_k(ranked, j, k) - rr) > 1e-9) ++bad;
    if (std::abs(recall_at_k(ranked, j, k) - hit) > 1e-9) ++bad;
  }
  c.expect(bad == 0, std::to_string(bad) + " metric values differ from the formulas");
}

// ---- 4 ---------------------------------------------------------------------

void criterion_extraction_golden(Check& c) {
  fs::path root = g_fixtures / "javalib";
  std::size_t files = 0, public_methods = 0, hidden_methods = 0, nested = 0, interfaces = 0;
  std::function<void(const java::TypeDecl&, bool)> walk = [&](const java::TypeDecl& t, bool top) {
    if (!top) ++nested;
    if (t.kind == java::TypeKind::interface_) ++interfaces;
    for (const auto& m : t.methods) {
      if (m.is_constructor) continue;
      bool pub = std::find(m.modifiers.begin(), m.modifiers.end(), "public") != m.modifiers.end() ||
                 (t.kind == java::TypeKind::interface_ &&
                  std::find(m.modifiers.begin(), m.modifiers.end(), "private") == m.modifiers.end());
      (pub ? public_methods : hidden_methods)++;
    }
    for (const auto& n : t.nested) walk(n, false);
  };
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.path().extension() != ".java") continue;
    ++files;
    auto parsed = java::parse_compilation_unit(read_text_file(e.path()));
    if (!parsed.ok()) {
      c.expect(false, "fixture " + e.path().string() + " does not parse");
      continue;
    }
    for (const auto& t : parsed.unit->types) walk(t, true);
  }
  c.expect(files >= 3 && public_methods >= 8 && hidden_methods >= 2 && nested >= 1 && interfaces >= 1,
           "fixture tree too small");

  ScratchDir dir;
  for (const char* out : {"kb1.jsonl", "kb2.jsonl"}) {
    auto r = lt_cli("build-kb --src " + q(root) + " --out " + q(dir / out));
    c.expect(r.exit_code == 0, std::string("build-kb failed: ") + r.stderr_text);
  }
  auto golden = load_jsonl_corpus<ApiEntry>(g_fixtures / "javalib.golden.jsonl");
  c.expect(load_jsonl_corpus<ApiEntry>(dir / "kb1.jsonl") == golden, "output differs from the golden kb");
  c.expect(read_text_file(dir / "kb1.jsonl") == read_text_file(dir / "kb2.jsonl"), "two runs differ");
}

// ---- 5 ---------------------------------------------------------------------

class MarkerEvaluator : public Evaluator {
 public:
  EvalOutcome evaluate(const SampleUnit&, const std::string& code) override {
    EvalOutcome o;
    std::smatch m;
    if (std::regex_search(code, m, std::regex(R"(OUT (\d) (\d+) (\d+))"))) {
      o.structurally_valid = true;
      o.compiled = m[1] == "1";
      o.tests_total = std::stoi(m[2]);
      o.tests_passed = std::stoi(m[3]);
    }
    if (!o.full_success()) o.diagnostics.push_back({{}, {}, {}, Severity::error, "failed", "failed"});
    return o;
  }
};

std::string code(const std::string& marker) { return "```java\npublic class A { // " + marker + "\n}\n```"; }

struct Scenario {
  std::string name;
  json script;
  int max_iterations;
  Termination termination;
  std::vector<std::tuple<bool, int>> keys;  // (compiled, tests_passed) per candidate
  std::size_t best;
  std::size_t grounding_calls;
  std::size_t refinement_calls;
};

void criterion_state_machine(Check& c) {
  std::vector<Scenario> scenarios{
      {"success on initial",
       {{"initial", {code("OUT 1 2 2")}}, {"grounding", {"[]"}}, {"refinement", {code("OUT 1 2 2")}}},
       3, Termination::success, {{true, 2}}, 0, 0, 0},
      {"no progress",
       {{"initial", {code("OUT 1 3 1")}}, {"grounding", {"[]"}}, {"refinement", {code("OUT 1 3 1 b"), code("OUT 1 3 3")}}},
       3, Termination::no_progress, {{true, 1}, {true, 1}}, 0, 1, 1},
      {"iteration cap",
       {{"initial", {code("OUT 0 0 0")}}, {"grounding", {"[]"}},
        {"refinement", {code("OUT 0 0 0 a"), code("OUT 0 0 0 b"), code("OUT 0 0 0 c")}}},
       3, Termination::iteration_cap, {{false, 0}, {false, 0}, {false, 0}, {false, 0}}, 0, 1, 3},
      {"best index",
       {{"initial", {code("OUT 0 0 0")}}, {"grounding", {"[]"}},
        {"refinement", {code("OUT 1 4 1"), code("OUT 1 4 3"), code("OUT 1 4 2")}}},
       5, Termination::no_progress, {{false, 0}, {true, 1}, {true, 3}, {true, 2}}, 2, 1, 3},
  };
  for (const auto& s : scenarios) {
    ScriptedProvider chat(s.script);
    PipelineConfig config;
    config.max_iterations = s.max_iterations;
    ReferenceIndex refs({{"r1", "BEGIN NULL; END;", "public class R {}", {}}});
    std::vector<ApiEntry> kb = load_jsonl_corpus<ApiEntry>(g_fixtures / "javalib.golden.jsonl");
    std::string arch = "Jobs extend BatchJob.";
    HashingEmbedder embedder(64);
    MarkerEvaluator evaluator;
    PipelineInputs in{refs, kb, config, arch, chat, embedder, evaluator};
    PipelineResult r = run_pipeline({"s", "BEGIN NULL; END;", {}, {}}, in);
    std::vector<std::tuple<bool, int>> keys;
    for (const auto& cand : r.trace.candidates) keys.push_back(cand.outcome.key());
    c.expect(r.trace.termination_reason == s.termination, s.name + ": termination " + to_string(r.trace.termination_reason));
    c.expect(keys == s.keys, s.name + ": candidate sequence differs");
    c.expect(r.trace.best_index == s.best, s.name + ": best_index " + std::to_string(r.trace.best_index));
    c.expect(chat.consumed(Role::grounding) == s.grounding_calls, s.name + ": grounding calls");
    c.expect(chat.consumed(Role::refinement) == s.refinement_calls, s.name + ": refinement calls");
  }
}

// ---- 6 ---------------------------------------------------------------------

std::vector<std::size_t> code_braces(const std::string& src) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < src.size(); ++i) {
    char ch = src[i];
    if (ch == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      i = src.find('\n', i);
      if (i == std::string::npos) break;
    } else if (ch == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      i = src.find("*/", i + 2) + 1;
    } else if (ch == '"' || ch == '\'') {
      for (++i; i < src.size() && src[i] != ch; ++i)
        if (src[i] == '\\') ++i;
    } else if (ch == '{' || ch == '}') {
      out.push_back(i);
    }
  }
  return out;
}

void criterion_structural_validity(Check& c) {
  ScratchDir dir;
  fs::path marker = dir / "compiler-called";
  PipelineConfig config;
  config.compile_command = "touch " + q(marker) + " # {workdir}";
  config.test_command = "true {workdir} {summary}";
  SandboxEvaluator evaluator(config);
  SampleUnit sample{"s", "BEGIN NULL; END;", {}, {}};

  std::size_t sources = 0, mutants = 0, valid_fail = 0, mutant_pass = 0;
  for (const auto& e : fs::recursive_directory_iterator(g_fixtures / "javalib")) {
    if (e.path().extension() != ".java") continue;
    std::string src = read_text_file(e.path());
    ++sources;
    if (!check_structural_validity(src).valid) ++valid_fail;
    for (std::size_t off : code_braces(src)) {
      std::string m = src;
      m.erase(off, 1);
      ++mutants;
      EvalOutcome o = evaluator.evaluate(sample, m);
      if (o.structurally_valid) ++mutant_pass;
    }
  }
  c.expect(sources >= 3 && valid_fail == 0, std::to_string(valid_fail) + " fixture files judged invalid");
  c.expect(mutants >= 20, "only " + std::to_string(mutants) + " mutants");
  c.expect(mutant_pass == 0, std::to_string(mutant_pass) + " mutants judged valid");
  c.expect(!fs::exists(marker), "compile command ran for an invalid candidate");
}

// ---- 7 and 8 ---------------------------------------------------------------

struct E2eRun {
  bool ok = false;
  std::string error;
  std::string metrics;
  json report;
  std::map<std::string, json> traces;
  double seconds = 0;
};

E2eRun run_e2e(const fs::path& dir, int workers) {
  E2eRun run;
  fs::path e2e = g_fixtures / "e2e";
  auto t0 = std::chrono::steady_clock::now();
  auto kb = lt_cli("build-kb --offline --src " + q(g_fixtures / "javalib") + " --out " + q(dir / "kb.jsonl"));
  auto tr = lt_cli("translate --offline --input " + q(e2e / "samples.jsonl") + " --refs " + q(e2e / "references.jsonl") +
                   " --kb " + q(dir / "kb.jsonl") + " --config " + q(e2e / "config.json") + " --script " +
                   q(e2e / "script.json") + " --out " + q(dir / "runs") + " --workers " + std::to_string(workers));
  auto ev = lt_cli("evaluate --runs " + q(dir / "runs") + " --samples " + q(e2e / "samples.jsonl"));
  run.seconds = seconds_since(t0);
  if (kb.exit_code || tr.exit_code || ev.exit_code) {
    run.error = kb.stderr_text + tr.stderr_text + ev.stderr_text;
    return run;
  }
  run.metrics = ev.stdout_text;
  run.report = json::parse(read_text_file(dir / "runs" / "report.json"));
  for (const auto& f : list_trace_files(dir / "runs")) run.traces[f.filename().string()] = json::parse(read_text_file(f));
  run.ok = true;
  return run;
}

E2eRun g_single;

void criterion_end_to_end(Check& c) {
  ScratchDir dir;
  g_single = run_e2e(dir / "w1", 1);
  c.expect(g_single.ok, "pipeline failed: " + g_single.error);
  if (!g_single.ok) return;
  // s1,s2,s5 pass every test; s3 and s6 compile with failures; s4 never yields valid code
  c.expect(g_single.metrics == "SV 83.3 CR 83.3 TPR 50.0\n", "metrics line was " + g_single.metrics);
  c.expect(g_single.report["tpr_fraction_pct"] == 63.9, "tpr_fraction_pct " + g_single.report["tpr_fraction_pct"].dump());
  c.expect(g_single.traces.size() == 6, "expected 6 traces");
  c.expect(g_single.seconds < 30.0, "took " + std::to_string(g_single.seconds) + " s");
}

void criterion_concurrency(Check& c) {
  if (!g_single.ok) {
    c.expect(false, "single-worker run unavailable");
    return;
  }
  ScratchDir dir;
  E2eRun multi = run_e2e(dir / "w4", 4);
  c.expect(multi.ok, "pipeline failed: " + multi.error);
  c.expect(multi.traces == g_single.traces, "traces differ between 1 and 4 workers");
  c.expect(multi.report == g_single.report, "reports differ between 1 and 4 workers");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <lt-binary> <fixtures-dir>\n";
    return 2;
  }
  g_lt = argv[1];
  g_fixtures = argv[2];

  struct Criterion {
    const char* name;
    void (*run)(Check&);
  };
  const Criterion criteria[] = {
      {"1 metric arithmetic reproduces reference rows", criterion_metric_arithmetic},
      {"2 top-k retrieval equals full-sort oracle", criterion_retrieval_oracle},
      {"3 NDCG/MRR/Recall equal direct formulas", criterion_metric_oracles},
      {"4 API extraction matches golden, idempotent", criterion_extraction_golden},
      {"5 pipeline state machine scenarios", criterion_state_machine},
      {"6 structural validity fixtures and brace mutants", criterion_structural_validity},
      {"7 offline end-to-end run", criterion_end_to_end},
      {"8 traces identical for 1 and 4 workers", criterion_concurrency},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    std::cout << (check.failures.empty() ? "PASS" : "FAIL") << "  criterion " << cr.name << "\n";
    for (const auto& f : check.failures) std::cout << "      " << f << "\n";
    failed += !check.failures.empty();
  }
  std::cout << (8 - failed) << "/8 criteria passed\n";
  return failed == 0 ? 0 : 1;
}
