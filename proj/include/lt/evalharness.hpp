#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lt/model.hpp"

namespace lt {

// ---- sandbox ---------------------------------------------------------------

inline constexpr int kTimeoutExitCode = 124;

struct SandboxResult {
  int exit_code = 0;
  std::string stdout_text;
  std::string stderr_text;
  double duration = 0.0;  // seconds
  bool timed_out = false;
};

/// Runs `command` through /bin/sh in its own process group. On timeout the
/// whole group is killed and exit_code is kTimeoutExitCode.
SandboxResult run_command(const std::string& command, double timeout_seconds,
                          const std::filesystem::path& cwd = {});

/// `$LT_SANDBOX_DIR` if set, else the system temp directory.
std::filesystem::path sandbox_root();

/// Private, uniquely named work directory, removed on destruction unless
/// `$LT_KEEP_SANDBOX` is set.
class Workdir {
 public:
  static Workdir create();
  Workdir() = default;
  Workdir(Workdir&& other) noexcept;
  Workdir& operator=(Workdir&& other) noexcept;
  Workdir(const Workdir&) = delete;
  Workdir& operator=(const Workdir&) = delete;
  ~Workdir();

  const std::filesystem::path& path() const { return path_; }

 private:
  explicit Workdir(std::filesystem::path p) : path_(std::move(p)) {}
  void release();
  std::filesystem::path path_;
};

/// Replaces every `{name}` placeholder.
std::string substitute(std::string templ, const std::string& name, const std::string& value);

// ---- structural validity ---------------------------------------------------

struct SyntaxCheck {
  bool valid = false;
  std::vector<Diagnostic> diagnostics;
};

/// True iff the text is a complete compilation unit declaring at least one
/// type. Purely grammatical; no external tool is run.
SyntaxCheck check_structural_validity(std::string_view java_code);

// ---- compilation -----------------------------------------------------------

/// Parses tool output line by line with `pattern` (groups: file, line,
/// optional column, severity, message). When nothing matches and
/// `fallback_raw` is set, every non-empty line becomes a raw diagnostic.
std::vector<Diagnostic> parse_diagnostics(const std::string& output, const std::string& pattern,
                                          bool fallback_raw = true);

struct CompileResult {
  bool compiled = false;
  std::vector<Diagnostic> diagnostics;
  SandboxResult sandbox;
  Workdir workdir;
  std::filesystem::path source_file;
};

/// Writes the candidate to `<workdir>/<PublicType>.java` and runs the
/// configured compile command. Throws CommandNotFound when the shell reports
/// exit status 127, WorkdirCreationFailure when no directory can be made.
CompileResult compile_candidate(std::string_view java_code, const PipelineConfig& config);

// ---- tests -----------------------------------------------------------------

struct TestFailure {
  std::string name;
  std::string detail;
};

struct TestRunResult {
  int total = 0;
  int passed = 0;
  std::vector<TestFailure> failures;
  std::vector<Diagnostic> harness_diagnostics;  // missing/malformed summary
  SandboxResult sandbox;
};

inline constexpr const char* kSummaryFileName = "test-summary.json";

/// Runs `test_command` with `{workdir}` and `{summary}` substituted and reads
/// the summary file `{"total","passed","failures":[{"name","detail"}]}`.
TestRunResult run_tests(const std::filesystem::path& workdir, const std::string& test_command, double timeout);

/// Failing test rendered into the diagnostic channel.
Diagnostic test_failure_diagnostic(const TestFailure& f);

// ---- evaluation ------------------------------------------------------------

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvalOutcome evaluate(const SampleUnit& sample, const std::string& java_code) = 0;
};

/// Structural check, then compile, then tests, stopping at the first failure.
class SandboxEvaluator : public Evaluator {
 public:
  explicit SandboxEvaluator(PipelineConfig config) : config_(std::move(config)) {}
  EvalOutcome evaluate(const SampleUnit& sample, const std::string& java_code) override;

 private:
  PipelineConfig config_;
};

// ---- reporting -------------------------------------------------------------

struct SampleSummary {
  std::string sample_id;
  EvalOutcome outcome;
  Termination termination_reason = Termination::success;
  int iterations = 0;  // refinement iterations performed
};

struct RetrievalSummary {
  double ndcg = 0.0;
  double mrr = 0.0;
  double recall = 0.0;
  std::size_t k = 3;
};

struct EvalReport {
  std::size_t n_samples = 0;
  double sv_pct = 0.0;
  double cr_pct = 0.0;
  double tpr_pct = 0.0;           // samples passing every test
  double tpr_fraction_pct = 0.0;  // mean per-sample passed/total
  std::vector<SampleSummary> per_sample;
  std::optional<RetrievalSummary> retrieval;
};

double round_to_tenth(double pct);

/// Scores each trace's best candidate. Samples without a trace count as
/// failures. Throws InvalidValue when n_samples is zero or smaller than the
/// number of traces.
EvalReport compute_report(const std::vector<RunTrace>& traces, std::size_t n_samples);

nlohmann::json report_to_json(const EvalReport& report);
/// Serialized form shared by `evaluate` and `report --format json`.
std::string render_report_json(const EvalReport& report);
std::string render_report_markdown(const EvalReport& report);
/// "SV 100.0 CR 52.9 TPR 33.8"
std::string metrics_line(const EvalReport& report);

}  // namespace lt
