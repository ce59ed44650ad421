#include "lt/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "lt/error.hpp"

namespace lt {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object()) throw InvalidValue("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw InvalidValue(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) throw InvalidValue(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::string optional_string(const json& j, const char* key, std::string fallback = {}) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw InvalidValue(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

int require_int(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer()) throw InvalidValue(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

bool require_bool(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_boolean()) throw InvalidValue(std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

std::optional<int> optional_int(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw InvalidValue(std::string("field '") + key + "' must be an integer");
  return it->get<int>();
}

std::vector<std::string> require_string_list(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_array()) throw InvalidValue(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw InvalidValue(std::string("field '") + key + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

template <typename Record>
const char* corpus_kind();
template <>
const char* corpus_kind<SampleUnit>() { return "sample"; }
template <>
const char* corpus_kind<ReferencePair>() { return "reference"; }
template <>
const char* corpus_kind<ApiEntry>() { return "api entry"; }

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

std::string make_api_id(const std::string& declaring_type, const std::string& method_name,
                        std::size_t arity) {
  return declaring_type + "#" + method_name + "/" + std::to_string(arity);
}

std::string to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

std::string to_string(SourceAgent a) { return a == SourceAgent::initial ? "initial" : "refinement"; }

std::string to_string(Termination t) {
  switch (t) {
    case Termination::success: return "success";
    case Termination::no_progress: return "no_progress";
    case Termination::iteration_cap: return "iteration_cap";
    case Termination::provider_error: return "provider_error";
  }
  return "unknown";
}

Termination termination_from_string(const std::string& s) {
  if (s == "success") return Termination::success;
  if (s == "no_progress") return Termination::no_progress;
  if (s == "iteration_cap") return Termination::iteration_cap;
  if (s == "provider_error") return Termination::provider_error;
  throw InvalidValue("unknown termination reason '" + s + "'");
}

void validate(const EvalOutcome& o) {
  if (o.tests_total < 0 || o.tests_passed < 0) throw InvalidValue("negative test count");
  if (o.tests_passed > o.tests_total) throw InvalidValue("tests_passed exceeds tests_total");
  if (!o.compiled && o.tests_passed != 0) throw InvalidValue("uncompiled candidate cannot pass tests");
  if (!o.structurally_valid && o.compiled) throw InvalidValue("structurally invalid candidate cannot compile");
}

std::size_t select_best(const std::vector<Candidate>& candidates) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].outcome.key() > candidates[best].outcome.key()) best = i;
  }
  return best;
}

void validate(const RunTrace& t) {
  if (t.sample_id.empty()) throw InvalidValue("trace has an empty sample id");
  if (t.candidates.empty()) throw InvalidValue("trace has no candidates");
  if (t.candidates.front().source_agent != SourceAgent::initial)
    throw InvalidValue("candidate 0 must come from the initial agent");
  for (std::size_t i = 0; i < t.candidates.size(); ++i) {
    const Candidate& c = t.candidates[i];
    if (c.iteration != static_cast<int>(i)) throw InvalidValue("candidate iterations must be consecutive from 0");
    if (i > 0 && c.source_agent != SourceAgent::refinement)
      throw InvalidValue("only candidate 0 may come from the initial agent");
    validate(c.outcome);
  }
  if (t.best_index >= t.candidates.size()) throw InvalidValue("best_index out of range");
  if (t.best_index != select_best(t.candidates)) throw InvalidValue("best_index does not select the best candidate");
}

// ---- JSON mapping ----------------------------------------------------------

void to_json(json& j, const SampleUnit& v) {
  j = json{{"id", v.id}, {"plsql_source", v.plsql_source}};
  if (v.test_command) j["test_command"] = *v.test_command;
  if (!v.metadata.empty()) j["metadata"] = v.metadata;
}

void from_json(const json& j, SampleUnit& v) {
  v.id = require_string(j, "id");
  v.plsql_source = require_string(j, "plsql_source");
  if (v.id.empty()) throw InvalidValue("sample id is empty");
  if (v.plsql_source.empty()) throw InvalidValue("plsql_source is empty");
  v.test_command.reset();
  if (auto it = j.find("test_command"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw InvalidValue("field 'test_command' must be a string");
    v.test_command = it->get<std::string>();
  }
  v.metadata.clear();
  if (auto it = j.find("metadata"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw InvalidValue("field 'metadata' must be an object");
    for (const auto& [key, value] : it->items()) {
      v.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
}

void to_json(json& j, const ReferencePair& v) {
  j = json{{"id", v.id}, {"plsql_source", v.plsql_source}, {"java_target", v.java_target}};
  if (v.embedding) j["embedding"] = *v.embedding;
}

void from_json(const json& j, ReferencePair& v) {
  v.id = require_string(j, "id");
  v.plsql_source = require_string(j, "plsql_source");
  v.java_target = require_string(j, "java_target");
  if (v.id.empty()) throw InvalidValue("reference id is empty");
  if (v.plsql_source.empty() || v.java_target.empty()) throw InvalidValue("reference sources must be non-empty");
  v.embedding.reset();
  if (auto it = j.find("embedding"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw InvalidValue("field 'embedding' must be an array");
    std::vector<double> values;
    values.reserve(it->size());
    for (const auto& x : *it) {
      if (!x.is_number()) throw InvalidValue("embedding values must be numbers");
      double d = x.get<double>();
      if (!std::isfinite(d)) throw InvalidValue("embedding values must be finite");
      values.push_back(d);
    }
    v.embedding = std::move(values);
  }
}

void to_json(json& j, const ApiEntry& v) {
  json params = json::array();
  for (const auto& p : v.parameters) params.push_back({{"name", p.name}, {"type", p.type}});
  j = json{{"id", v.id},
           {"declaring_type", v.declaring_type},
           {"method_name", v.method_name},
           {"parameters", params},
           {"return_type", v.return_type},
           {"body", v.body},
           {"file_location", {{"path", v.file_location.path}, {"line", v.file_location.line}}},
           {"description", v.description}};
}

void from_json(const json& j, ApiEntry& v) {
  v.id = require_string(j, "id");
  v.declaring_type = require_string(j, "declaring_type");
  v.method_name = require_string(j, "method_name");
  v.return_type = require_string(j, "return_type");
  v.body = optional_string(j, "body");
  v.description = optional_string(j, "description");
  if (v.id.empty()) throw InvalidValue("api entry id is empty");
  const json& params = require(j, "parameters");
  if (!params.is_array()) throw InvalidValue("field 'parameters' must be an array");
  v.parameters.clear();
  for (const auto& p : params) {
    v.parameters.push_back({require_string(p, "name"), require_string(p, "type")});
  }
  const json& loc = require(j, "file_location");
  v.file_location = {require_string(loc, "path"), require_int(loc, "line")};
}

void to_json(json& j, const Diagnostic& v) {
  j = json::object();
  if (v.file) j["file"] = *v.file;
  if (v.line) j["line"] = *v.line;
  if (v.column) j["column"] = *v.column;
  j["severity"] = to_string(v.severity);
  j["message"] = v.message;
  j["raw"] = v.raw;
}

void from_json(const json& j, Diagnostic& v) {
  auto it = j.find("file");
  v.file = (it != j.end() && it->is_string()) ? std::optional(it->get<std::string>()) : std::nullopt;
  v.line = optional_int(j, "line");
  v.column = optional_int(j, "column");
  std::string sev = require_string(j, "severity");
  if (sev == "error") v.severity = Severity::error;
  else if (sev == "warning") v.severity = Severity::warning;
  else throw InvalidValue("unknown severity '" + sev + "'");
  v.message = require_string(j, "message");
  v.raw = require_string(j, "raw");
  if (v.raw.empty()) throw InvalidValue("diagnostic raw text is empty");
}

void to_json(json& j, const EvalOutcome& v) {
  j = json{{"structurally_valid", v.structurally_valid},
           {"compiled", v.compiled},
           {"tests_total", v.tests_total},
           {"tests_passed", v.tests_passed},
           {"diagnostics", v.diagnostics}};
}

void from_json(const json& j, EvalOutcome& v) {
  v.structurally_valid = require_bool(j, "structurally_valid");
  v.compiled = require_bool(j, "compiled");
  v.tests_total = require_int(j, "tests_total");
  v.tests_passed = require_int(j, "tests_passed");
  v.diagnostics.clear();
  for (const auto& d : require(j, "diagnostics")) v.diagnostics.push_back(d.get<Diagnostic>());
  validate(v);
}

void to_json(json& j, const Candidate& v) {
  j = json{{"iteration", v.iteration},
           {"source_agent", to_string(v.source_agent)},
           {"java_code", v.java_code},
           {"outcome", v.outcome}};
}

void from_json(const json& j, Candidate& v) {
  v.iteration = require_int(j, "iteration");
  std::string agent = require_string(j, "source_agent");
  if (agent == "initial") v.source_agent = SourceAgent::initial;
  else if (agent == "refinement") v.source_agent = SourceAgent::refinement;
  else throw InvalidValue("unknown source agent '" + agent + "'");
  v.java_code = require_string(j, "java_code");
  v.outcome = require(j, "outcome").get<EvalOutcome>();
}

void to_json(json& j, const RunTrace& v) {
  j = json{{"sample_id", v.sample_id},
           {"candidates", v.candidates},
           {"shortlist", v.shortlist},
           {"termination_reason", to_string(v.termination_reason)},
           {"best_index", v.best_index}};
}

void from_json(const json& j, RunTrace& v) {
  v.sample_id = require_string(j, "sample_id");
  v.candidates.clear();
  const json& cands = require(j, "candidates");
  if (!cands.is_array()) throw InvalidValue("field 'candidates' must be an array");
  for (const auto& c : cands) v.candidates.push_back(c.get<Candidate>());
  v.shortlist = require_string_list(j, "shortlist");
  v.termination_reason = termination_from_string(require_string(j, "termination_reason"));
  int best = require_int(j, "best_index");
  if (best < 0) throw InvalidValue("best_index is negative");
  v.best_index = static_cast<std::size_t>(best);
  validate(v);
}

// ---- config ----------------------------------------------------------------

namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

void validate(const PipelineConfig& c) {
  if (c.k_exemplars < 1) throw InvalidValue("k_exemplars must be positive");
  if (c.max_iterations < 1) throw InvalidValue("max_iterations must be positive");
  if (c.embedding_dim < 1) throw InvalidValue("embedding_dim must be positive");
  if (c.temperature < 0) throw InvalidValue("temperature must be non-negative");
  if (c.request_timeout <= 0 || c.sandbox_timeout <= 0) throw InvalidValue("timeouts must be positive");
  if (c.max_output_tokens < 1) throw InvalidValue("max_output_tokens must be positive");
  if (c.compile_command.find("{workdir}") == std::string::npos)
    throw InvalidValue("compile_command must contain {workdir}");
  if (c.test_command.find("{workdir}") == std::string::npos)
    throw InvalidValue("test_command must contain {workdir}");
  if (c.test_command.find("{summary}") == std::string::npos)
    throw InvalidValue("test_command must contain {summary}");
}

PipelineConfig parse_config(const json& doc, const fs::path& config_dir) {
  if (!doc.is_object()) throw InvalidValue("config must be a JSON object");
  PipelineConfig c;
  try {
    c.provider_endpoint = doc.value("provider_endpoint", c.provider_endpoint);
    c.chat_model_id = doc.value("chat_model_id", c.chat_model_id);
    c.embed_model_id = doc.value("embed_model_id", c.embed_model_id);
    c.embedding_dim = doc.value("embedding_dim", c.embedding_dim);
    c.k_exemplars = doc.value("k_exemplars", c.k_exemplars);
    c.max_iterations = doc.value("max_iterations", c.max_iterations);
    c.compile_command = doc.value("compile_command", c.compile_command);
    c.test_command = doc.value("test_command", c.test_command);
    c.architecture_description_path =
        doc.value("architecture_description_path", c.architecture_description_path);
    c.request_timeout = doc.value("request_timeout", c.request_timeout);
    c.sandbox_timeout = doc.value("sandbox_timeout", c.sandbox_timeout);
    c.temperature = doc.value("temperature", c.temperature);
    c.max_output_tokens = doc.value("max_output_tokens", c.max_output_tokens);
    c.kb_digest_max_lines = doc.value("kb_digest_max_lines", c.kb_digest_max_lines);
    c.diagnostic_pattern = doc.value("diagnostic_pattern", c.diagnostic_pattern);
    if (auto it = doc.find("script_path"); it != doc.end() && !it->is_null())
      c.script_path = it->get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidValue(std::string("config: ") + e.what());
  }

  std::string dir = config_dir.empty() ? std::string(".") : config_dir.string();
  replace_all(c.compile_command, "{config_dir}", dir);
  replace_all(c.test_command, "{config_dir}", dir);
  auto resolve = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative() && !config_dir.empty()) p = (config_dir / p).string();
  };
  resolve(c.architecture_description_path);
  if (c.script_path) resolve(*c.script_path);

  validate(c);
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidValue("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc, fs::absolute(path).parent_path());
}

// ---- files -----------------------------------------------------------------

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile(path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoFailure("write failed: " + path.string());
}

template <typename Record>
std::vector<Record> load_jsonl_corpus(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw MissingFile(path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile(path.string());

  std::vector<Record> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    Record rec;
    try {
      rec = json::parse(line).get<Record>();
    } catch (const json::exception& e) {
      throw MalformedLine(line_no, e.what());
    } catch (const InvalidValue& e) {
      throw MalformedLine(line_no, std::string(corpus_kind<Record>()) + ": " + e.what());
    }
    if (!seen.insert(rec.id).second) throw DuplicateId(rec.id);
    records.push_back(std::move(rec));
  }
  if constexpr (std::is_same_v<Record, ReferencePair>) {
    std::optional<std::size_t> dim;
    for (const auto& r : records) {
      if (!r.embedding) continue;
      if (!dim) dim = r.embedding->size();
      else if (*dim != r.embedding->size())
        throw InvalidValue("reference " + r.id + " has embedding dimension " +
                           std::to_string(r.embedding->size()) + ", corpus uses " + std::to_string(*dim));
    }
  }
  return records;
}

template <typename Record>
void write_jsonl_corpus(const std::vector<Record>& records, const fs::path& path) {
  std::string text;
  for (const auto& r : records) {
    text += json(r).dump();
    text += '\n';
  }
  write_text_file(path, text);
}

template std::vector<SampleUnit> load_jsonl_corpus<SampleUnit>(const fs::path&);
template std::vector<ReferencePair> load_jsonl_corpus<ReferencePair>(const fs::path&);
template std::vector<ApiEntry> load_jsonl_corpus<ApiEntry>(const fs::path&);
template void write_jsonl_corpus<SampleUnit>(const std::vector<SampleUnit>&, const fs::path&);
template void write_jsonl_corpus<ReferencePair>(const std::vector<ReferencePair>&, const fs::path&);
template void write_jsonl_corpus<ApiEntry>(const std::vector<ApiEntry>&, const fs::path&);

fs::path write_run_trace(const RunTrace& trace, const fs::path& dir) {
  validate(trace);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create " + dir.string() + ": " + ec.message());
  fs::path path = dir / (trace.sample_id + ".trace.json");
  write_text_file(path, json(trace).dump(2) + "\n");
  return path;
}

RunTrace load_run_trace(const fs::path& path) {
  std::string text = read_text_file(path);
  try {
    return json::parse(text).get<RunTrace>();
  } catch (const json::exception& e) {
    throw InvalidValue("trace " + path.string() + ": " + e.what());
  }
}

std::vector<fs::path> list_trace_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  const std::string suffix = ".trace.json";
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lt
