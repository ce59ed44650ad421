#include "lt/agents.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "lt/apikb.hpp"
#include "lt/error.hpp"
#include "lt/evalharness.hpp"
#include "lt/java_parser.hpp"
#include "lt/retriever.hpp"

namespace lt {

using nlohmann::json;

namespace {

constexpr const char* kTranslatorSystem =
    "You are a senior engineer migrating Oracle PL/SQL modules to Java. The Java code must fit the "
    "existing in-house architecture: extend the prescribed base classes and call the shared APIs.";

constexpr const char* kGroundingSystem =
    "You select APIs from an internal Java knowledge base that a failing translation needs.";

constexpr const char* kRefinerSystem =
    "You repair Java translations of PL/SQL code using compiler errors, failing tests and the in-house APIs.";

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string fenced(const std::string& lang, const std::string& code) {
  std::string out = "```" + lang + "\n" + code;
  if (out.back() != '\n') out += '\n';
  return out + "```\n";
}

}  // namespace

void to_json(json& j, const PromptRecord& r) {
  j = json{{"role", to_string(r.role)},
           {"iteration", r.iteration},
           {"system", r.system_text},
           {"user", r.user_text},
           {"response", r.response}};
}

ChatResponse AgentSession::ask(Role role, int iteration, std::string system_text, std::string user_text) const {
  ChatRequest req;
  req.system_text = std::move(system_text);
  req.user_text = std::move(user_text);
  req.temperature = config.temperature;
  req.max_output_tokens = config.max_output_tokens;
  req.timeout = config.request_timeout;
  req.role = role;
  req.scope = scope;
  ChatResponse resp = chat.chat(req);
  if (log) log->push_back({role, iteration, req.system_text, req.user_text, resp.text});
  return resp;
}

// ---- initial translation ---------------------------------------------------

PromptBundle assemble_initial_prompt(const std::string& arch_description,
                                     const std::vector<RetrievedExemplar>& exemplars, const SampleUnit& sample) {
  if (trim(arch_description).empty()) throw EmptyArchitectureDescription();
  PromptBundle b;
  b.system_text = kTranslatorSystem;
  std::string& u = b.user_text;

  b.part_markers[0] = u.size();
  u += "## Target architecture\n";
  u += arch_description;
  if (u.back() != '\n') u += '\n';

  b.part_markers[1] = u.size();
  u += "\n## Translation examples\n";
  if (exemplars.empty()) u += "No examples available.\n";
  for (const auto& ex : exemplars) {
    u += "\n### Example " + std::to_string(ex.rank) + "\nPL/SQL:\n";
    u += fenced("sql", ex.pair.plsql_source);
    u += "Java:\n";
    u += fenced("java", ex.pair.java_target);
  }

  b.part_markers[2] = u.size();
  u += "\n## Code to translate\n";
  u += "Translate this PL/SQL code into Java for the architecture above. Answer with a single fenced "
       "```java code block containing the complete compilation unit.\n";
  u += fenced("sql", sample.plsql_source);
  return b;
}

std::string extract_code_block(std::string_view text) {
  struct Block {
    std::string tag;
    std::string body;
  };
  std::vector<Block> blocks;
  std::optional<Block> open;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    std::string stripped = trim(line);
    bool fence = stripped.rfind("```", 0) == 0;
    if (open) {
      if (fence && trim(std::string_view(stripped).substr(3)).empty()) {
        blocks.push_back(std::move(*open));
        open.reset();
      } else {
        open->body += line;
        open->body += '\n';
      }
    } else if (fence) {
      open = Block{trim(std::string_view(stripped).substr(3)), {}};
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (open) blocks.push_back(std::move(*open));  // unterminated final fence

  std::string code;
  if (blocks.empty()) {
    code = trim(text);
  } else {
    const Block* chosen = &blocks.back();
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
      std::string tag = it->tag;
      std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::tolower(c); });
      if (tag == "java") {
        chosen = &*it;
        break;
      }
    }
    code = chosen->body;
    while (!code.empty() && (code.back() == '\n' || code.back() == '\r')) code.pop_back();
  }
  if (trim(code).empty()) throw EmptyTranslation();
  return code;
}

std::string translate_initial(const SampleUnit& sample, ReferenceIndex& refs, const std::string& arch_description,
                              Embedder& embedder, const AgentSession& session) {
  std::vector<RetrievedExemplar> exemplars;
  if (refs.size() > 0) {
    exemplars = retrieve_top_k(sample, refs, static_cast<std::size_t>(session.config.k_exemplars), embedder);
  }
  PromptBundle bundle = assemble_initial_prompt(arch_description, exemplars, sample);
  ChatResponse resp = session.ask(Role::initial, 0, bundle.system_text, bundle.user_text);
  return extract_code_block(resp.text);
}

// ---- grounding -------------------------------------------------------------

std::string render_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  if (diagnostics.empty()) return "No diagnostics were reported.\n";
  std::string out;
  const std::size_t shown = std::min(diagnostics.size(), kMaxPromptDiagnostics);
  for (std::size_t i = 0; i < shown; ++i) {
    std::string raw = diagnostics[i].raw.empty() ? diagnostics[i].message : diagnostics[i].raw;
    if (raw.size() > kMaxDiagnosticChars) raw = raw.substr(0, kMaxDiagnosticChars) + "...";
    out += "- " + raw + "\n";
  }
  if (diagnostics.size() > shown) {
    out += "[... " + std::to_string(diagnostics.size() - shown) + " more diagnostics omitted]\n";
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '_') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> fallback_shortlist(const std::vector<ApiEntry>& kb, const std::string& code,
                                            const std::vector<Diagnostic>& diagnostics, std::size_t limit) {
  std::unordered_set<std::string> context;
  for (const auto& d : diagnostics) {
    for (auto& t : word_tokens(d.message)) context.insert(std::move(t));
  }
  std::vector<java::Token> tokens;
  if (!java::tokenize(code, tokens)) {
    for (const auto& t : tokens) {
      if (t.kind == java::TokenKind::identifier) {
        for (auto& w : word_tokens(t.text)) context.insert(std::move(w));
      }
    }
  } else {
    for (auto& w : word_tokens(code)) context.insert(std::move(w));
  }

  struct Scored {
    std::size_t score;
    std::size_t index;
  };
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < kb.size(); ++i) {
    auto words = word_tokens(signature_text(kb[i]) + " " + kb[i].description);
    std::set<std::string> unique(words.begin(), words.end());
    std::size_t score = 0;
    for (const auto& w : unique) score += context.count(w);
    if (score > 0) scored.push_back({score, i});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < std::min(limit, scored.size()); ++i) ids.push_back(kb[scored[i].index].id);
  return ids;
}

std::optional<std::vector<std::string>> parse_id_list(std::string_view text) {
  auto open = text.find('[');
  auto close = text.rfind(']');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
  json doc = json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) return std::nullopt;
  std::vector<std::string> ids;
  for (const auto& v : doc) {
    if (!v.is_string()) return std::nullopt;
    ids.push_back(v.get<std::string>());
  }
  return ids;
}

Shortlist ground_apis(const std::vector<ApiEntry>& kb, const std::string& code,
                      const std::vector<Diagnostic>& diagnostics, const AgentSession& session) {
  if (kb.empty()) throw EmptyKnowledgeBase();

  std::string prompt = "## API knowledge base\n";
  prompt += render_kb_digest(kb, session.config.kb_digest_max_lines);
  prompt += "\n## Current Java translation\n" + fenced("java", code);
  prompt += "\n## Compiler and test feedback\n" + render_diagnostics(diagnostics);
  prompt += "\n## Instruction\nSelect the knowledge-base entries this code most likely needs in order to "
            "fix the errors above. Answer with a JSON array of entry ids, for example [\"" +
            kb.front().id + "\"].\n";

  Shortlist shortlist;
  auto answer = parse_id_list(session.ask(Role::grounding, 0, kGroundingSystem, prompt).text);
  if (!answer) {
    std::string strict = prompt +
                         "\nYour previous answer could not be parsed. Reply with ONLY a JSON array of entry id "
                         "strings taken from the knowledge base above and no other text.\n";
    answer = parse_id_list(session.ask(Role::grounding, 0, kGroundingSystem, strict).text);
  }

  if (!answer) {
    shortlist.fallback_used = true;
    shortlist.entry_ids = fallback_shortlist(kb, code, diagnostics);
    return shortlist;
  }

  std::unordered_set<std::string> known;
  for (const auto& e : kb) known.insert(e.id);
  std::unordered_set<std::string> taken;
  for (const auto& id : *answer) {
    if (!known.count(id)) {
      shortlist.rejected_ids.push_back(id);
    } else if (taken.insert(id).second) {
      shortlist.entry_ids.push_back(id);
    }
  }
  return shortlist;
}

// ---- refinement ------------------------------------------------------------

std::string build_refinement_prompt(const std::string& current, const std::vector<ApiEntry>& shortlisted,
                                    const std::vector<Diagnostic>& diagnostics) {
  std::string p = "## Relevant APIs\n";
  if (shortlisted.empty()) p += "No API context available.\n";
  for (const auto& e : shortlisted) {
    p += "\n### " + e.id + "\nSignature: " + signature_text(e) + "\n";
    if (!e.description.empty()) p += "Description: " + e.description + "\n";
    p += "Location: " + e.file_location.path + ":" + std::to_string(e.file_location.line) + "\n";
    if (!e.body.empty()) p += "Body:\n" + fenced("java", e.body);
  }
  p += "\n## Current Java translation\n" + fenced("java", current);
  p += "\n## Compiler and test feedback\n" + render_diagnostics(diagnostics);
  p += "\n## Instruction\nRevise the translation so it compiles and passes the tests, using the APIs above "
       "where they apply. Output the complete revised compilation unit in one fenced ```java block.\n";
  return p;
}

std::string refine_once(const std::string& current, const std::vector<ApiEntry>& shortlisted,
                        const std::vector<Diagnostic>& diagnostics, const AgentSession& session, int iteration) {
  std::string prompt = build_refinement_prompt(current, shortlisted, diagnostics);
  return extract_code_block(session.ask(Role::refinement, iteration, kRefinerSystem, prompt).text);
}

// ---- orchestration ---------------------------------------------------------

namespace {

Diagnostic harness_error(const std::string& message) {
  Diagnostic d;
  d.severity = Severity::error;
  d.message = message;
  d.raw = message;
  return d;
}

// Outcome for a candidate whose evaluation itself failed.
EvalOutcome failed_evaluation(const std::string& code, const std::string& what) {
  EvalOutcome o;
  o.structurally_valid = !code.empty() && check_structural_validity(code).valid;
  o.diagnostics.push_back(harness_error(what));
  return o;
}

}  // namespace

PipelineResult run_pipeline(const SampleUnit& sample, const PipelineInputs& in) {
  PipelineResult result;
  RunTrace& trace = result.trace;
  trace.sample_id = sample.id;
  AgentSession session{in.chat, in.config, sample.id, &result.prompts};

  auto finish = [&](Termination reason) -> PipelineResult& {
    trace.termination_reason = reason;
    trace.best_index = select_best(trace.candidates);
    return result;
  };
  auto abort_with = [&](const std::string& what) -> PipelineResult& {
    result.error = what;
    return finish(Termination::provider_error);
  };

  std::string code;
  try {
    code = translate_initial(sample, in.refs, in.arch_description, in.embedder, session);
  } catch (const std::exception& e) {
    EvalOutcome o;
    o.diagnostics.push_back(harness_error(std::string("initial translation failed: ") + e.what()));
    trace.candidates.push_back({0, SourceAgent::initial, "", std::move(o)});
    return abort_with(e.what());
  }

  EvalOutcome outcome;
  try {
    outcome = in.evaluator.evaluate(sample, code);
  } catch (const std::exception& e) {
    trace.candidates.push_back({0, SourceAgent::initial, code, failed_evaluation(code, e.what())});
    return abort_with(e.what());
  }
  trace.candidates.push_back({0, SourceAgent::initial, code, outcome});
  if (outcome.full_success()) return finish(Termination::success);

  // Failure path: ground once, then refine against the fixed shortlist.
  std::vector<ApiEntry> shortlisted;
  if (!in.kb.empty()) {
    try {
      Shortlist sl = ground_apis(in.kb, code, outcome.diagnostics, session);
      trace.shortlist = sl.entry_ids;
      std::unordered_map<std::string, const ApiEntry*> by_id;
      for (const auto& e : in.kb) by_id.emplace(e.id, &e);
      for (const auto& id : sl.entry_ids) shortlisted.push_back(*by_id.at(id));
    } catch (const std::exception& e) {
      return abort_with(std::string("grounding failed: ") + e.what());
    }
  }

  for (int m = 1; m <= in.config.max_iterations; ++m) {
    std::vector<Diagnostic> feedback = outcome.diagnostics;
    if (feedback.empty()) {
      feedback.push_back(harness_error("tests passed " + std::to_string(outcome.tests_passed) + " of " +
                                       std::to_string(outcome.tests_total)));
    }
    const EvalOutcome best_before = trace.candidates[select_best(trace.candidates)].outcome;

    try {
      code = refine_once(code, shortlisted, feedback, session, m);
    } catch (const std::exception& e) {
      return abort_with(std::string("refinement failed: ") + e.what());
    }
    try {
      outcome = in.evaluator.evaluate(sample, code);
    } catch (const std::exception& e) {
      trace.candidates.push_back({m, SourceAgent::refinement, code, failed_evaluation(code, e.what())});
      return abort_with(e.what());
    }
    trace.candidates.push_back({m, SourceAgent::refinement, code, outcome});

    if (outcome.full_success()) return finish(Termination::success);
    // Once a compiling candidate exists, stop as soon as a step fails to pass more tests.
    if (best_before.compiled && !(outcome.key() > best_before.key())) return finish(Termination::no_progress);
  }
  return finish(Termination::iteration_cap);
}

BatchSummary run_batch(const std::vector<SampleUnit>& samples, const PipelineInputs& inputs,
                       const std::filesystem::path& out_dir, std::size_t workers) {
  BatchSummary summary;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::filesystem::create_directories(out_dir);

  auto work = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      const SampleUnit& s = samples[i];
      try {
        PipelineResult r = run_pipeline(s, inputs);
        write_run_trace(r.trace, out_dir);
        json prompts = r.prompts;
        write_text_file(out_dir / (s.id + ".prompts.json"), prompts.dump(2) + "\n");
        std::lock_guard lock(mu);
        ++summary.traces_written;
        std::cerr << s.id << ": " << to_string(r.trace.termination_reason) << " after "
                  << r.trace.candidates.size() << " candidate(s)";
        if (r.error) std::cerr << " (" << *r.error << ")";
        std::cerr << "\n";
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        summary.aborted.push_back(s.id);
        std::cerr << s.id << ": aborted: " << e.what() << "\n";
      }
    }
  };

  workers = std::max<std::size_t>(1, std::min(workers, samples.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::sort(summary.aborted.begin(), summary.aborted.end());
  return summary;
}

}  // namespace lt
