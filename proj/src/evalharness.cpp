#include "lt/evalharness.hpp"

#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "lt/error.hpp"
#include "lt/java_parser.hpp"

namespace lt {

namespace fs = std::filesystem;
using nlohmann::json;

SyntaxCheck check_structural_validity(std::string_view java_code) {
  SyntaxCheck check;
  java::ParseResult parsed = java::parse_compilation_unit(java_code);
  auto add = [&](int line, int column, const std::string& message) {
    Diagnostic d;
    d.line = line;
    d.column = column;
    d.severity = Severity::error;
    d.message = message;
    d.raw = std::to_string(line) + ":" + std::to_string(column) + ": error: " + message;
    check.diagnostics.push_back(std::move(d));
  };
  if (!parsed.ok()) {
    add(parsed.error->line, parsed.error->column, parsed.error->message);
    return check;
  }
  if (parsed.unit->types.empty()) {
    add(1, 1, "compilation unit declares no type");
    return check;
  }
  check.valid = true;
  return check;
}

std::vector<Diagnostic> parse_diagnostics(const std::string& output, const std::string& pattern, bool fallback_raw) {
  std::regex re(pattern);
  std::vector<Diagnostic> matched;
  std::vector<Diagnostic> raw_lines;
  std::istringstream in(output);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::smatch m;
    if (std::regex_match(line, m, re) && m.size() >= 6) {
      Diagnostic d;
      d.file = m[1].str();
      d.line = std::stoi(m[2].str());
      if (m[3].matched) d.column = std::stoi(m[3].str());
      d.severity = m[4].str() == "warning" ? Severity::warning : Severity::error;
      d.message = m[5].str();
      d.raw = line;
      matched.push_back(std::move(d));
    } else if (fallback_raw) {
      Diagnostic d;
      d.severity = Severity::error;
      d.message = line;
      d.raw = line;
      raw_lines.push_back(std::move(d));
    }
  }
  // Continuation lines (source excerpt, caret) belong to the matched entries.
  return matched.empty() ? raw_lines : matched;
}

CompileResult compile_candidate(std::string_view java_code, const PipelineConfig& config) {
  CompileResult result;
  result.workdir = Workdir::create();
  std::string type_name = java::primary_type_name(java_code).value_or("Main");
  result.source_file = result.workdir.path() / (type_name + ".java");
  write_text_file(result.source_file, std::string(java_code));

  std::string command = substitute(config.compile_command, "workdir", result.workdir.path().string());
  result.sandbox = run_command(command, config.sandbox_timeout, result.workdir.path());
  if (result.sandbox.exit_code == 127 && !result.sandbox.timed_out) {
    throw CommandNotFound("compile command not found: " + command + "\n" + result.sandbox.stderr_text);
  }
  result.compiled = result.sandbox.exit_code == 0 && !result.sandbox.timed_out;
  if (result.compiled) return result;

  if (result.sandbox.timed_out) {
    Diagnostic d;
    d.message = "compilation timed out after " + std::to_string(config.sandbox_timeout) + " s";
    d.raw = d.message;
    result.diagnostics.push_back(std::move(d));
    return result;
  }
  result.diagnostics =
      parse_diagnostics(result.sandbox.stderr_text + result.sandbox.stdout_text, config.diagnostic_pattern);
  if (result.diagnostics.empty()) {
    Diagnostic d;
    d.message = "compiler exited with status " + std::to_string(result.sandbox.exit_code);
    d.raw = d.message;
    result.diagnostics.push_back(std::move(d));
  }
  return result;
}

Diagnostic test_failure_diagnostic(const TestFailure& f) {
  Diagnostic d;
  d.severity = Severity::error;
  d.message = "test " + f.name + " failed: " + f.detail;
  d.raw = d.message;
  return d;
}

TestRunResult run_tests(const fs::path& workdir, const std::string& test_command, double timeout) {
  TestRunResult r;
  const fs::path summary = workdir / kSummaryFileName;
  std::error_code ec;
  fs::remove(summary, ec);

  std::string command = substitute(test_command, "workdir", workdir.string());
  command = substitute(command, "summary", summary.string());
  r.sandbox = run_command(command, timeout, workdir);
  if (r.sandbox.exit_code == 127 && !r.sandbox.timed_out) {
    throw CommandNotFound("test command not found: " + command + "\n" + r.sandbox.stderr_text);
  }

  auto harness = [&](const std::string& msg) {
    Diagnostic d;
    d.severity = Severity::error;
    d.message = "test harness: " + msg;
    d.raw = d.message;
    r.harness_diagnostics.push_back(std::move(d));
    r.total = 0;
    r.passed = 0;
    r.failures.clear();
  };

  if (r.sandbox.timed_out) {
    harness("tests timed out after " + std::to_string(timeout) + " s");
    return r;
  }
  if (!fs::is_regular_file(summary)) {
    harness("no summary file written (exit status " + std::to_string(r.sandbox.exit_code) + ")");
    return r;
  }
  try {
    json doc = json::parse(read_text_file(summary));
    r.total = doc.at("total").get<int>();
    r.passed = doc.at("passed").get<int>();
    if (auto it = doc.find("failures"); it != doc.end()) {
      for (const auto& f : *it) {
        r.failures.push_back({f.value("name", std::string("?")), f.value("detail", std::string())});
      }
    }
    if (r.total < 0 || r.passed < 0 || r.passed > r.total) harness("inconsistent counts in summary");
  } catch (const json::exception& e) {
    harness(std::string("malformed summary: ") + e.what());
  }
  return r;
}

EvalOutcome SandboxEvaluator::evaluate(const SampleUnit& sample, const std::string& java_code) {
  EvalOutcome outcome;
  SyntaxCheck syntax = check_structural_validity(java_code);
  outcome.structurally_valid = syntax.valid;
  if (!syntax.valid) {
    outcome.diagnostics = std::move(syntax.diagnostics);
    return outcome;
  }

  CompileResult compiled = compile_candidate(java_code, config_);
  outcome.compiled = compiled.compiled;
  if (!compiled.compiled) {
    outcome.diagnostics = std::move(compiled.diagnostics);
    return outcome;
  }

  const std::string& test_command = sample.test_command ? *sample.test_command : config_.test_command;
  TestRunResult tests = run_tests(compiled.workdir.path(), test_command, config_.sandbox_timeout);
  outcome.tests_total = tests.total;
  outcome.tests_passed = tests.passed;
  outcome.diagnostics = std::move(tests.harness_diagnostics);
  for (const auto& f : tests.failures) outcome.diagnostics.push_back(test_failure_diagnostic(f));
  return outcome;
}

// ---- reporting -------------------------------------------------------------

double round_to_tenth(double pct) { return std::round(pct * 10.0) / 10.0; }

EvalReport compute_report(const std::vector<RunTrace>& traces, std::size_t n_samples) {
  if (n_samples == 0) throw InvalidValue("report needs at least one sample");
  if (traces.size() > n_samples) throw InvalidValue("more traces than samples");

  EvalReport report;
  report.n_samples = n_samples;
  std::size_t valid = 0, compiled = 0, all_pass = 0;
  double fraction_sum = 0.0;
  for (const auto& t : traces) {
    const Candidate& best = t.best();
    const EvalOutcome& o = best.outcome;
    valid += o.structurally_valid ? 1 : 0;
    compiled += o.compiled ? 1 : 0;
    all_pass += o.full_success() ? 1 : 0;
    if (o.tests_total > 0) fraction_sum += static_cast<double>(o.tests_passed) / o.tests_total;
    report.per_sample.push_back({t.sample_id, o, t.termination_reason, static_cast<int>(t.candidates.size()) - 1});
  }
  const double n = static_cast<double>(n_samples);
  report.sv_pct = round_to_tenth(100.0 * static_cast<double>(valid) / n);
  report.cr_pct = round_to_tenth(100.0 * static_cast<double>(compiled) / n);
  report.tpr_pct = round_to_tenth(100.0 * static_cast<double>(all_pass) / n);
  report.tpr_fraction_pct = round_to_tenth(100.0 * fraction_sum / n);
  return report;
}

json report_to_json(const EvalReport& r) {
  json per_sample = json::array();
  for (const auto& s : r.per_sample) {
    per_sample.push_back({{"sample_id", s.sample_id},
                          {"outcome", s.outcome},
                          {"termination_reason", to_string(s.termination_reason)},
                          {"iterations", s.iterations}});
  }
  json doc = {{"n_samples", r.n_samples},
              {"sv_pct", r.sv_pct},
              {"cr_pct", r.cr_pct},
              {"tpr_pct", r.tpr_pct},
              {"tpr_fraction_pct", r.tpr_fraction_pct},
              {"per_sample", per_sample}};
  if (r.retrieval) {
    doc["retrieval"] = {{"k", r.retrieval->k},
                        {"ndcg", r.retrieval->ndcg},
                        {"mrr", r.retrieval->mrr},
                        {"recall", r.retrieval->recall}};
  }
  return doc;
}

std::string render_report_json(const EvalReport& report) { return report_to_json(report).dump(2) + "\n"; }

namespace {

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace

std::string metrics_line(const EvalReport& r) {
  return "SV " + fixed1(r.sv_pct) + " CR " + fixed1(r.cr_pct) + " TPR " + fixed1(r.tpr_pct);
}

std::string render_report_markdown(const EvalReport& r) {
  std::ostringstream out;
  out << "# Translation report\n\n";
  out << "Samples: " << r.n_samples << "\n\n";
  out << "| Structural Validity (%) | Compilation Rate (%) | Test Pass Rate (%) |\n";
  out << "|---|---|---|\n";
  out << "| " << fixed1(r.sv_pct) << " | " << fixed1(r.cr_pct) << " | " << fixed1(r.tpr_pct) << " |\n\n";
  out << "Mean per-sample test fraction: " << fixed1(r.tpr_fraction_pct) << "%\n";
  if (r.retrieval) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "\nRetrieval@%zu: NDCG %.3f, MRR %.3f, Recall %.3f\n", r.retrieval->k,
                  r.retrieval->ndcg, r.retrieval->mrr, r.retrieval->recall);
    out << buf;
  }
  if (!r.per_sample.empty()) {
    out << "\n| Sample | Valid | Compiled | Tests | Termination | Iterations |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto& s : r.per_sample) {
      out << "| " << s.sample_id << " | " << (s.outcome.structurally_valid ? "yes" : "no") << " | "
          << (s.outcome.compiled ? "yes" : "no") << " | " << s.outcome.tests_passed << "/" << s.outcome.tests_total
          << " | " << to_string(s.termination_reason) << " | " << s.iterations << " |\n";
    }
  }
  return out.str();
}

}  // namespace lt
