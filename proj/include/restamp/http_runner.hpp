#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "restamp/jsonx.hpp"
#include "restamp/spec_index.hpp"
#include "restamp/test_dsl.hpp"

namespace restamp {

// Executes suites sequentially against a live base URL and records every
// exchanged request for coverage. A run never mutates the suite.

struct RunOptions {
    double timeout_s = 10.0;
    int retries = 0;
    const SpecIndex* index = nullptr;           // enables matched-template attribution
    std::filesystem::path asset_root;           // resolves body file references
    bool zero_durations = false;                // deterministic report trees for replay mode
};

enum class Verdict { Passed, Failed, Errored };
std::string to_string(Verdict v);

struct AssertionFailure {
    int step = 0;
    AssertionKind kind = AssertionKind::StatusEquals;
    std::string selector;
    std::string expected;
    std::string actual;
};

struct PathBinding {
    std::string value;
    bool via_capture = false;
};

struct StepOutcome {
    std::string method;
    std::string url;  // path + query, relative to the target
    std::string matched_template;  // "unmatched" without attribution
    int status = 0;
    std::map<std::string, PathBinding> path_bindings;
    std::map<std::string, std::string> captured_values;
    std::vector<std::string> asserted_body_literals;  // expected values of body_field_equals
};

struct CaseResult {
    std::string name;
    Verdict verdict = Verdict::Passed;
    std::vector<AssertionFailure> failures;  // empty when errored
    std::string fault;                       // set when errored
    double duration_ms = 0.0;
    int failed_step = -1;
    std::vector<StepOutcome> steps;
};

struct ExecutionReport {
    std::vector<CaseResult> cases;
    int passed = 0;
    int failed = 0;
    int errored = 0;

    Json to_json() const;
    static ExecutionReport from_json(const Json& doc);
    // Compact summary fed back to agents: verdicts and diagnostics, no timing.
    std::string render_text() const;
};

struct InteractionRecord {
    int sequence = 0;
    std::string method;
    std::string matched_template;  // "unmatched" when unattributed
    std::string url;               // path + query
    std::string request_content_type;
    std::vector<std::string> path_param_names;
    std::vector<std::string> query_param_names;
    std::vector<std::string> header_param_names;
    std::vector<std::string> form_param_names;
    int status = 0;
    std::string response_content_type;
    std::string body_digest;

    Json to_json() const;
    static InteractionRecord from_json(const Json& doc);
};

struct InteractionLog {
    std::string target;
    std::vector<InteractionRecord> records;
};

std::pair<ExecutionReport, InteractionLog> run_suite(const TestSuite& suite, const std::string& target_base_url,
                                                     const RunOptions& options = {});

// Template attribution: placeholders match exactly one nonempty segment,
// literals match byte-wise, most literal segments wins, ties go to document
// order. Only templates documenting `method` are candidates.
std::optional<std::string> match_path(const SpecIndex& index, const std::string& method,
                                      const std::string& concrete_url);

// Line-delimited JSON: a {"target": ...} header line, then one record per line.
std::string serialize_log(const InteractionLog& log);
InteractionLog parse_log(const std::string& text);
InteractionLog load_log_file(const std::filesystem::path& path);

}  // namespace restamp
