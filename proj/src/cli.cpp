#include "lt/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "lt/agents.hpp"
#include "lt/apikb.hpp"
#include "lt/error.hpp"
#include "lt/evalharness.hpp"
#include "lt/model.hpp"
#include "lt/provider.hpp"
#include "lt/retriever.hpp"

namespace lt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kPartialFailure = 2;

struct Options {
  // shared
  std::string config_path;
  bool offline = false;
  std::string script_path;

  // build-kb
  std::string src_dir;
  std::string kb_out;
  bool describe = false;

  // translate
  std::string input_path;
  std::string refs_path;
  std::string kb_path;
  std::string out_dir;
  std::size_t workers = 1;
  bool write_embeddings = false;

  // evaluate / report
  std::string runs_dir;
  std::string report_out;
  std::string samples_path;
  std::string retrieval_path;
  std::string format = "json";

  // retriever-eval
  std::string queries_path;
  std::string qrels_path;
  std::size_t k = 3;
  std::string metrics_out;
};

std::optional<PipelineConfig> resolve_config(const Options& opt, bool required) {
  std::string path = opt.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("LT_CONFIG"); env && *env) path = env;
  }
  if (path.empty()) {
    if (required) throw InvalidValue("no configuration: pass --config or set LT_CONFIG");
    return std::nullopt;
  }
  return load_config(path);
}

std::unique_ptr<ChatProvider> make_chat(const Options& opt, const std::optional<PipelineConfig>& cfg) {
  std::string script = opt.script_path;
  if (script.empty() && cfg && cfg->script_path) script = *cfg->script_path;
  if (!script.empty()) return load_scripted_provider(script);
  if (opt.offline) throw InvalidValue("offline mode needs a scripted provider (--script or script_path)");
  if (!cfg) throw InvalidValue("no configuration for the HTTP provider: pass --config or set LT_CONFIG");
  return std::make_unique<HttpProvider>(
      HttpProviderOptions{cfg->provider_endpoint, cfg->chat_model_id, cfg->embed_model_id, {}, cfg->request_timeout});
}

std::unique_ptr<Embedder> make_embedder(const Options& opt, const std::optional<PipelineConfig>& cfg) {
  if (opt.offline) return std::make_unique<HashingEmbedder>(cfg ? static_cast<std::size_t>(cfg->embedding_dim) : 256);
  if (!cfg) throw InvalidValue("no configuration for the HTTP provider: pass --config or set LT_CONFIG");
  return std::make_unique<HttpProvider>(
      HttpProviderOptions{cfg->provider_endpoint, cfg->chat_model_id, cfg->embed_model_id, {}, cfg->request_timeout});
}

int cmd_build_kb(const Options& opt) {
  ExtractionResult extracted;
  try {
    extracted = extract_api_entries(opt.src_dir);
  } catch (const MissingRoot& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  for (const auto& w : extracted.warnings) std::cerr << "warning: " << w << "\n";
  if (extracted.entries.empty()) std::cerr << "warning: no public API methods found under " << opt.src_dir << "\n";

  std::vector<ApiEntry> entries = std::move(extracted.entries);
  if (opt.describe) {
    std::unique_ptr<ChatProvider> chat;
    if (!opt.offline) chat = make_chat(opt, resolve_config(opt, false));
    auto flush = [&](const std::vector<ApiEntry>& partial) { write_jsonl_corpus(partial, opt.kb_out); };
    entries = generate_descriptions(std::move(entries), chat.get(), flush);
  }
  write_jsonl_corpus(entries, opt.kb_out);
  std::cout << entries.size() << " API entries written to " << opt.kb_out << "\n";
  return kOk;
}

int cmd_translate(const Options& opt) {
  std::optional<PipelineConfig> cfg = resolve_config(opt, true);
  auto samples = load_jsonl_corpus<SampleUnit>(opt.input_path);
  auto refs = load_jsonl_corpus<ReferencePair>(opt.refs_path);
  auto kb = load_jsonl_corpus<ApiEntry>(opt.kb_path);
  if (cfg->architecture_description_path.empty()) throw InvalidValue("architecture_description_path is not set");
  std::string arch = read_text_file(cfg->architecture_description_path);
  for (const auto& s : samples) {
    if (s.test_command && s.test_command->find("{summary}") == std::string::npos)
      throw InvalidValue("sample " + s.id + ": test_command must contain {summary}");
  }

  auto chat = make_chat(opt, cfg);
  auto embedder = make_embedder(opt, cfg);
  ReferenceIndex index(std::move(refs));
  SandboxEvaluator evaluator(*cfg);
  PipelineInputs inputs{index, kb, *cfg, arch, *chat, *embedder, evaluator};

  BatchSummary summary = run_batch(samples, inputs, opt.out_dir, opt.workers);
  if (opt.write_embeddings) write_jsonl_corpus(index.pairs(), opt.refs_path);

  std::cout << summary.traces_written << " of " << samples.size() << " samples traced in " << opt.out_dir << "\n";
  if (!summary.aborted.empty()) {
    std::cerr << summary.aborted.size() << " sample(s) aborted without a trace\n";
    return kPartialFailure;
  }
  return kOk;
}

EvalReport build_report(const Options& opt) {
  auto files = list_trace_files(opt.runs_dir);
  if (files.empty()) throw InvalidValue("no trace files in " + opt.runs_dir);
  std::vector<RunTrace> traces;
  for (const auto& f : files) traces.push_back(load_run_trace(f));

  std::size_t n = traces.size();
  if (!opt.samples_path.empty()) n = load_jsonl_corpus<SampleUnit>(opt.samples_path).size();
  EvalReport report = compute_report(traces, n);

  if (!opt.retrieval_path.empty()) {
    json doc = json::parse(read_text_file(opt.retrieval_path));
    report.retrieval = RetrievalSummary{doc.at("ndcg").get<double>(), doc.at("mrr").get<double>(),
                                        doc.at("recall").get<double>(), doc.at("k").get<std::size_t>()};
  }
  return report;
}

int cmd_evaluate(const Options& opt) {
  EvalReport report = build_report(opt);
  fs::path out = opt.report_out.empty() ? fs::path(opt.runs_dir) / "report.json" : fs::path(opt.report_out);
  write_text_file(out, render_report_json(report));
  std::cout << metrics_line(report) << "\n";
  return kOk;
}

int cmd_report(const Options& opt) {
  EvalReport report = build_report(opt);
  std::string text = opt.format == "md" ? render_report_markdown(report) : render_report_json(report);
  if (opt.report_out.empty()) {
    std::cout << text;
  } else {
    write_text_file(opt.report_out, text);
  }
  return kOk;
}

int cmd_retriever_eval(const Options& opt) {
  auto refs = load_jsonl_corpus<ReferencePair>(opt.refs_path);
  auto queries = load_jsonl_corpus<SampleUnit>(opt.queries_path);
  auto qrels = load_qrels(opt.qrels_path);
  std::map<std::string, RelevanceJudgments> by_query;
  for (auto& q : qrels) by_query.emplace(q.query_id, std::move(q));

  std::vector<RelevanceJudgments> judgments;
  for (const auto& q : queries) {
    auto it = by_query.find(q.id);
    if (it == by_query.end()) {
      std::cerr << "error: no qrels row for query " << q.id << "\n";
      return kInputError;
    }
    judgments.push_back(it->second);
  }

  std::optional<PipelineConfig> cfg = opt.offline ? resolve_config(opt, false) : resolve_config(opt, true);
  auto embedder = make_embedder(opt, cfg);
  ReferenceIndex index(std::move(refs));
  std::vector<std::vector<std::string>> rankings;
  for (const auto& q : queries) {
    std::vector<std::string> ids;
    for (const auto& ex : retrieve_top_k(q, index, opt.k, *embedder)) ids.push_back(ex.pair.id);
    rankings.push_back(std::move(ids));
  }
  RetrievalMetrics m = mean_retrieval_metrics(rankings, judgments, opt.k);

  char line[160];
  std::snprintf(line, sizeof line, "NDCG@%zu %.3f MRR@%zu %.3f Recall@%zu %.3f", opt.k, m.ndcg, opt.k, m.mrr, opt.k,
                m.recall);
  std::cout << line << "\n";
  if (!opt.metrics_out.empty()) {
    json doc = {{"k", opt.k}, {"ndcg", m.ndcg}, {"mrr", m.mrr}, {"recall", m.recall}, {"queries", m.queries}};
    write_text_file(opt.metrics_out, doc.dump(2) + "\n");
  }
  if (opt.write_embeddings) write_jsonl_corpus(index.pairs(), opt.refs_path);
  return kOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"PL/SQL to Java translation pipeline with API grounding and compiler-feedback refinement", "lt"};
  app.require_subcommand(1);
  Options opt;

  auto* build_kb = app.add_subcommand("build-kb", "Extract the API knowledge base from Java library sources");
  build_kb->add_option("--src", opt.src_dir, "Root of the Java sources to scan")->required();
  build_kb->add_option("--out", opt.kb_out, "Output kb.jsonl")->required();
  build_kb->add_flag("--describe", opt.describe, "Fill descriptions with the describe model");
  build_kb->add_flag("--offline", opt.offline, "Use the deterministic description template");
  build_kb->add_option("--script", opt.script_path, "Scripted provider for descriptions");
  build_kb->add_option("--config", opt.config_path, "Pipeline configuration (JSON)");

  auto* translate = app.add_subcommand("translate", "Run the translation pipeline over a sample corpus");
  translate->add_option("--input", opt.input_path, "samples.jsonl")->required();
  translate->add_option("--refs", opt.refs_path, "references.jsonl")->required();
  translate->add_option("--kb", opt.kb_path, "kb.jsonl")->required();
  translate->add_option("--config", opt.config_path, "Pipeline configuration (JSON); defaults to $LT_CONFIG");
  translate->add_option("--out", opt.out_dir, "Directory for traces and prompt logs")->required();
  translate->add_option("--workers", opt.workers, "Concurrent samples")->check(CLI::PositiveNumber);
  translate->add_flag("--offline", opt.offline, "Hashing embedder and scripted chat, no network");
  translate->add_option("--script", opt.script_path, "Scripted provider file");
  translate->add_flag("--write-embeddings", opt.write_embeddings, "Cache computed embeddings into --refs");

  auto* evaluate = app.add_subcommand("evaluate", "Compute SV/CR/TPR from run traces");
  evaluate->add_option("--runs", opt.runs_dir, "Directory of *.trace.json")->required();
  evaluate->add_option("--out", opt.report_out, "report.json path (default <runs>/report.json)");
  evaluate->add_option("--samples", opt.samples_path, "Corpus; samples without a trace count as failures");
  evaluate->add_option("--retrieval", opt.retrieval_path, "Metrics file written by retriever-eval --out");

  auto* retriever_eval = app.add_subcommand("retriever-eval", "NDCG/MRR/Recall of exemplar retrieval");
  retriever_eval->add_option("--refs", opt.refs_path, "references.jsonl")->required();
  retriever_eval->add_option("--queries", opt.queries_path, "Queries in samples.jsonl format")->required();
  retriever_eval->add_option("--qrels", opt.qrels_path, "qrels.jsonl")->required();
  retriever_eval->add_option("--k", opt.k, "Cutoff")->check(CLI::PositiveNumber);
  retriever_eval->add_flag("--offline", opt.offline, "Use the hashing embedder");
  retriever_eval->add_option("--config", opt.config_path, "Pipeline configuration (JSON)");
  retriever_eval->add_option("--out", opt.metrics_out, "Write the metrics as JSON");
  retriever_eval->add_flag("--write-embeddings", opt.write_embeddings, "Cache computed embeddings into --refs");

  auto* report = app.add_subcommand("report", "Render the evaluation report");
  report->add_option("--runs", opt.runs_dir, "Directory of *.trace.json")->required();
  report->add_option("--format", opt.format, "json or md")->check(CLI::IsMember({"json", "md"}));
  report->add_option("--out", opt.report_out, "Output file (default stdout)");
  report->add_option("--samples", opt.samples_path, "Corpus; samples without a trace count as failures");
  report->add_option("--retrieval", opt.retrieval_path, "Metrics file written by retriever-eval --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    CLI::App* failed = &app;
    for (auto* sub : app.get_subcommands()) failed = sub;
    std::cerr << failed->help();
    return kInputError;
  }

  try {
    if (*build_kb) return cmd_build_kb(opt);
    if (*translate) return cmd_translate(opt);
    if (*evaluate) return cmd_evaluate(opt);
    if (*retriever_eval) return cmd_retriever_eval(opt);
    if (*report) return cmd_report(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace lt
