#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "restamp/jsonx.hpp"

namespace restamp {

// Declarative test-suite format ("restamp-suite/1"). Suites are data, not
// host-language code: the runner executes them and the repair agent gets
// machine-readable diagnostics when they do not parse.

inline constexpr std::string_view kSuiteFormatTag = "restamp-suite/1";

enum class Origin { Seed, SingleAgent, MultiAgent, Repair };
std::string to_string(Origin origin);
std::optional<Origin> origin_from_string(std::string_view s);

enum class AssertionKind {
    StatusEquals,
    StatusClassEquals,
    HeaderContains,
    ContentTypeEquals,
    BodyFieldEquals,
    BodyFieldExists,
};
std::string to_string(AssertionKind kind);
std::optional<AssertionKind> assertion_kind_from_string(std::string_view s);
bool is_body_assertion(AssertionKind kind);

struct Assertion {
    AssertionKind kind = AssertionKind::StatusEquals;
    std::string expected;  // canonical literal text
    std::string selector;  // dotted path into a JSON or XML body; body assertions only
    std::string header;    // header name; header_contains only
};

struct BodySpec {
    std::string content_type;
    std::string payload;    // inline payload text, or
    std::string file_ref;   // relative path inside the suite's asset directory
    std::string file_part;  // multipart part name for the file, default "file"
};

using KvPairs = std::vector<std::pair<std::string, std::string>>;

struct TestStep {
    std::string method;  // upper-case
    std::string path;    // template with {name} segments or a concrete path
    KvPairs path_params;
    KvPairs query_params;
    KvPairs form_params;
    KvPairs headers;
    std::optional<BodySpec> body;
    KvPairs captures;  // variable -> response selector (status | header:<Name> | body | body.<path>)
    std::vector<Assertion> assertions;
};

struct TestCase {
    std::string name;  // [A-Za-z][A-Za-z0-9_]*
    std::string description;
    Origin origin = Origin::Seed;
    std::vector<TestStep> steps;
};

struct TestSuite {
    std::string name;
    KvPairs base_headers;
    std::vector<TestCase> cases;

    const TestCase* find_case(std::string_view name) const;
};

struct Diagnostic {
    std::string code;      // machine-readable, e.g. "duplicate-case-name"
    std::string message;   // human-readable detail
    std::string location;  // JSON-pointer-ish position, e.g. "/cases/2/steps/0"
    Json to_json() const;
};

struct ParseResult {
    std::optional<TestSuite> suite;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return suite.has_value() && diagnostics.empty(); }
    std::string diagnostics_text() const;
};

ParseResult parse_suite(const std::string& text);
std::string serialize_suite(const TestSuite& suite);
Json suite_to_json(const TestSuite& suite);

struct LintFinding {
    std::string criterion;  // meaningful-naming | structural-coherence | idiomatic-correctness
    std::string case_name;
    std::string message;
};

std::vector<LintFinding> lint_suite(const TestSuite& suite);

// Name collisions in `generated` get a numeric suffix; order is base then generated.
TestSuite merge_suites(const TestSuite& base, const TestSuite& generated);

bool structurally_equal(const TestSuite& a, const TestSuite& b);

bool valid_case_name(std::string_view name);

// Variable names a step's path placeholders can bind to: path_params of the
// step plus captures of earlier steps.
std::vector<std::string> path_placeholders(std::string_view path);

}  // namespace restamp
