#include "restamp/test_dsl.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "restamp/util.hpp"

namespace restamp {

namespace {

std::string literal_to_text(const Json& value) {
    if (value.is_string()) return value.get<std::string>();
    return value.dump();
}

KvPairs object_to_pairs(const Json& node) {
    KvPairs out;
    for (const auto& [k, v] : node.items()) out.emplace_back(k, literal_to_text(v));
    return out;
}

Json pairs_to_object(const KvPairs& pairs) {
    Json obj = Json::object();
    for (const auto& [k, v] : pairs) obj[k] = v;
    return obj;
}

class SuiteReader {
public:
    explicit SuiteReader(std::vector<Diagnostic>& diagnostics) : diagnostics_(diagnostics) {}

    void error(const std::string& code, const std::string& message, const std::string& location) {
        diagnostics_.push_back({code, message, location});
    }

    TestSuite read(const Json& doc) {
        TestSuite suite;
        if (!doc.is_object()) {
            error("bad-root", "suite document must be a JSON object", "");
            return suite;
        }
        std::string format = doc.value("format", "");
        if (format != kSuiteFormatTag) {
            error("bad-format-tag", "expected format '" + std::string(kSuiteFormatTag) + "', got '" + format + "'",
                  "/format");
        }
        suite.name = doc.value("name", "");
        if (doc.contains("base_headers")) suite.base_headers = object_to_pairs(doc.at("base_headers"));

        std::set<std::string> seen_names;
        if (doc.contains("cases")) {
            const Json& cases = doc.at("cases");
            if (!cases.is_array()) {
                error("bad-cases", "'cases' must be an array", "/cases");
                return suite;
            }
            for (std::size_t i = 0; i < cases.size(); ++i) {
                std::string loc = "/cases/" + std::to_string(i);
                TestCase tc = read_case(cases[i], loc);
                if (!seen_names.insert(tc.name).second) {
                    error("duplicate-case-name", "case name '" + tc.name + "' is used more than once", loc + "/name");
                }
                suite.cases.push_back(std::move(tc));
            }
        }
        return suite;
    }

private:
    TestCase read_case(const Json& node, const std::string& loc) {
        TestCase tc;
        if (!node.is_object()) {
            error("bad-case", "case must be an object", loc);
            return tc;
        }
        tc.name = node.value("name", "");
        if (!valid_case_name(tc.name)) {
            error("bad-case-name", "case name '" + tc.name + "' does not match [A-Za-z][A-Za-z0-9_]*", loc + "/name");
        }
        tc.description = node.value("description", "");
        std::string origin = node.value("origin", "seed");
        if (auto o = origin_from_string(origin)) {
            tc.origin = *o;
        } else {
            error("bad-origin", "unknown origin '" + origin + "'", loc + "/origin");
        }
        if (!node.contains("steps") || !node.at("steps").is_array() || node.at("steps").empty()) {
            error("no-steps", "case '" + tc.name + "' must contain at least one step", loc + "/steps");
            return tc;
        }
        const Json& steps = node.at("steps");
        for (std::size_t i = 0; i < steps.size(); ++i) {
            std::string step_loc = loc + "/steps/" + std::to_string(i);
            TestStep step = read_step(steps[i], step_loc);
            for (const auto& placeholder : path_placeholders(step.path)) {
                bool bound = captured_.count(placeholder) > 0 ||
                             std::any_of(step.path_params.begin(), step.path_params.end(),
                                         [&](const auto& kv) { return kv.first == placeholder; });
                if (!bound) {
                    error("unbound-path-parameter",
                          "path parameter '{" + placeholder + "}' in '" + step.path +
                              "' has no binding in path_params or a prior capture",
                          step_loc + "/path");
                }
            }
            for (const auto& [var, selector] : step.captures) {
                (void)selector;
                captured_.insert(var);
            }
            tc.steps.push_back(std::move(step));
        }
        if (!tc.steps.empty() && tc.steps.back().assertions.empty()) {
            error("no-final-assertion", "the last step of case '" + tc.name + "' must carry at least one assertion",
                  loc + "/steps/" + std::to_string(tc.steps.size() - 1));
        }
        return tc;
    }

    TestStep read_step(const Json& node, const std::string& loc) {
        TestStep step;
        if (!node.is_object()) {
            error("bad-step", "step must be an object", loc);
            return step;
        }
        step.method = to_upper(node.value("method", ""));
        static const std::set<std::string> methods = {"GET", "POST", "PUT", "DELETE", "PATCH", "HEAD"};
        if (methods.count(step.method) == 0) {
            error("bad-method", "unknown HTTP method '" + step.method + "'", loc + "/method");
        }
        step.path = node.value("path", "");
        if (step.path.empty() || step.path[0] != '/') {
            error("bad-path", "step path must begin with '/'", loc + "/path");
        }
        if (node.contains("path_params")) step.path_params = object_to_pairs(node.at("path_params"));
        if (node.contains("query_params")) step.query_params = object_to_pairs(node.at("query_params"));
        if (node.contains("form_params")) step.form_params = object_to_pairs(node.at("form_params"));
        if (node.contains("headers")) step.headers = object_to_pairs(node.at("headers"));
        if (node.contains("body") && !node.at("body").is_null()) {
            const Json& body = node.at("body");
            BodySpec spec;
            spec.content_type = body.value("content_type", "");
            spec.payload = body.value("payload", "");
            spec.file_ref = body.value("file", "");
            spec.file_part = body.value("file_part", "file");
            if (spec.content_type.empty()) {
                error("body-without-content-type", "body requires a content_type", loc + "/body");
            }
            if (!spec.file_ref.empty()) {
                std::filesystem::path ref(spec.file_ref);
                if (ref.is_absolute() || spec.file_ref.find("..") != std::string::npos) {
                    error("asset-escapes-suite-dir",
                          "file reference '" + spec.file_ref + "' must stay inside the suite's asset directory",
                          loc + "/body/file");
                }
            }
            step.body = std::move(spec);
        }
        if (node.contains("captures")) step.captures = object_to_pairs(node.at("captures"));
        if (node.contains("assertions")) {
            const Json& asserts = node.at("assertions");
            for (std::size_t i = 0; i < asserts.size(); ++i) {
                std::string a_loc = loc + "/assertions/" + std::to_string(i);
                const Json& a = asserts[i];
                Assertion assertion;
                std::string kind = a.value("kind", "");
                auto parsed = assertion_kind_from_string(kind);
                if (!parsed) {
                    error("bad-assertion-kind", "unknown assertion kind '" + kind + "'", a_loc + "/kind");
                    continue;
                }
                assertion.kind = *parsed;
                if (a.contains("expected")) assertion.expected = literal_to_text(a.at("expected"));
                assertion.selector = a.value("selector", "");
                assertion.header = a.value("header", "");
                bool has_selector = !assertion.selector.empty();
                if (is_body_assertion(assertion.kind) != has_selector) {
                    error("selector-mismatch",
                          "selector must be present exactly when the assertion targets the body", a_loc);
                }
                if (assertion.kind == AssertionKind::HeaderContains && assertion.header.empty()) {
                    error("missing-header-name", "header_contains requires a 'header' field", a_loc);
                }
                step.assertions.push_back(std::move(assertion));
            }
        }
        return step;
    }

    std::vector<Diagnostic>& diagnostics_;
    // Captures are suite-scoped: cases run sequentially, so a later case may
    // bind a placeholder through an earlier case's capture.
    std::set<std::string> captured_;
};

Json step_to_json(const TestStep& step) {
    Json out = Json::object();
    out["method"] = step.method;
    out["path"] = step.path;
    if (!step.path_params.empty()) out["path_params"] = pairs_to_object(step.path_params);
    if (!step.query_params.empty()) out["query_params"] = pairs_to_object(step.query_params);
    if (!step.form_params.empty()) out["form_params"] = pairs_to_object(step.form_params);
    if (!step.headers.empty()) out["headers"] = pairs_to_object(step.headers);
    if (step.body) {
        Json body = Json::object();
        body["content_type"] = step.body->content_type;
        if (!step.body->payload.empty()) body["payload"] = step.body->payload;
        if (!step.body->file_ref.empty()) {
            body["file"] = step.body->file_ref;
            if (step.body->file_part != "file") body["file_part"] = step.body->file_part;
        }
        out["body"] = std::move(body);
    }
    if (!step.captures.empty()) out["captures"] = pairs_to_object(step.captures);
    if (!step.assertions.empty()) {
        Json asserts = Json::array();
        for (const auto& a : step.assertions) {
            Json ja = Json::object();
            ja["kind"] = to_string(a.kind);
            ja["expected"] = a.expected;
            if (!a.selector.empty()) ja["selector"] = a.selector;
            if (!a.header.empty()) ja["header"] = a.header;
            asserts.push_back(std::move(ja));
        }
        out["assertions"] = std::move(asserts);
    }
    return out;
}

}  // namespace

std::string to_string(Origin origin) {
    switch (origin) {
        case Origin::Seed: return "seed";
        case Origin::SingleAgent: return "single-agent";
        case Origin::MultiAgent: return "multi-agent";
        case Origin::Repair: return "repair";
    }
    return "seed";
}

std::optional<Origin> origin_from_string(std::string_view s) {
    if (s == "seed") return Origin::Seed;
    if (s == "single-agent") return Origin::SingleAgent;
    if (s == "multi-agent") return Origin::MultiAgent;
    if (s == "repair") return Origin::Repair;
    return std::nullopt;
}

std::string to_string(AssertionKind kind) {
    switch (kind) {
        case AssertionKind::StatusEquals: return "status_equals";
        case AssertionKind::StatusClassEquals: return "status_class_equals";
        case AssertionKind::HeaderContains: return "header_contains";
        case AssertionKind::ContentTypeEquals: return "content_type_equals";
        case AssertionKind::BodyFieldEquals: return "body_field_equals";
        case AssertionKind::BodyFieldExists: return "body_field_exists";
    }
    return "status_equals";
}

std::optional<AssertionKind> assertion_kind_from_string(std::string_view s) {
    if (s == "status_equals") return AssertionKind::StatusEquals;
    if (s == "status_class_equals") return AssertionKind::StatusClassEquals;
    if (s == "header_contains") return AssertionKind::HeaderContains;
    if (s == "content_type_equals") return AssertionKind::ContentTypeEquals;
    if (s == "body_field_equals") return AssertionKind::BodyFieldEquals;
    if (s == "body_field_exists") return AssertionKind::BodyFieldExists;
    return std::nullopt;
}

bool is_body_assertion(AssertionKind kind) {
    return kind == AssertionKind::BodyFieldEquals || kind == AssertionKind::BodyFieldExists;
}

const TestCase* TestSuite::find_case(std::string_view name) const {
    for (const auto& c : cases) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

Json Diagnostic::to_json() const {
    return Json{{"code", code}, {"message", message}, {"location", location}};
}

std::string ParseResult::diagnostics_text() const {
    std::ostringstream out;
    for (const auto& d : diagnostics) {
        out << d.code << " at " << (d.location.empty() ? "/" : d.location) << ": " << d.message << "\n";
    }
    return out.str();
}

bool valid_case_name(std::string_view name) {
    if (name.empty() || !std::isalpha(static_cast<unsigned char>(name[0]))) return false;
    return std::all_of(name.begin(), name.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

std::vector<std::string> path_placeholders(std::string_view path) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = path.find('{', pos)) != std::string_view::npos) {
        std::size_t close = path.find('}', pos + 1);
        if (close == std::string_view::npos) break;
        out.emplace_back(path.substr(pos + 1, close - pos - 1));
        pos = close + 1;
    }
    return out;
}

ParseResult parse_suite(const std::string& text) {
    ParseResult result;
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        result.diagnostics.push_back(
            {"json-syntax", e.what(), "byte " + std::to_string(e.byte)});
        return result;
    }
    SuiteReader reader(result.diagnostics);
    TestSuite suite = reader.read(doc);
    if (result.diagnostics.empty()) {
        result.suite = std::move(suite);
    }
    return result;
}

Json suite_to_json(const TestSuite& suite) {
    Json out = Json::object();
    out["format"] = std::string(kSuiteFormatTag);
    out["name"] = suite.name;
    if (!suite.base_headers.empty()) out["base_headers"] = pairs_to_object(suite.base_headers);
    Json cases = Json::array();
    for (const auto& tc : suite.cases) {
        Json jc = Json::object();
        jc["name"] = tc.name;
        if (!tc.description.empty()) jc["description"] = tc.description;
        jc["origin"] = to_string(tc.origin);
        Json steps = Json::array();
        for (const auto& step : tc.steps) steps.push_back(step_to_json(step));
        jc["steps"] = std::move(steps);
        cases.push_back(std::move(jc));
    }
    out["cases"] = std::move(cases);
    return out;
}

std::string serialize_suite(const TestSuite& suite) {
    return suite_to_json(suite).dump(2) + "\n";
}

std::vector<LintFinding> lint_suite(const TestSuite& suite) {
    std::vector<LintFinding> findings;
    for (const auto& tc : suite.cases) {
        // Meaningful Naming: starts with "test" and carries at least two
        // camel-case words overall.
        int words = 0;
        if (!tc.name.empty()) {
            words = 1;
            for (std::size_t i = 1; i < tc.name.size(); ++i) {
                if (std::isupper(static_cast<unsigned char>(tc.name[i])) || tc.name[i] == '_') ++words;
            }
        }
        if (!starts_with(tc.name, "test") || words < 2) {
            findings.push_back({"meaningful-naming", tc.name,
                                "name should start with 'test' and contain at least two camel-case words"});
        }

        // Structural Coherence: arrange-act-assert, so only the final step asserts.
        for (std::size_t i = 0; i + 1 < tc.steps.size(); ++i) {
            if (!tc.steps[i].assertions.empty()) {
                findings.push_back({"structural-coherence", tc.name,
                                    "step " + std::to_string(i) + " carries assertions before the final request"});
            }
        }

        // Idiomatic Correctness: literals and selectors that the runner can act on.
        for (std::size_t i = 0; i < tc.steps.size(); ++i) {
            for (const auto& a : tc.steps[i].assertions) {
                if (a.kind == AssertionKind::StatusEquals) {
                    char* end = nullptr;
                    long code = std::strtol(a.expected.c_str(), &end, 10);
                    if (end == nullptr || *end != '\0' || code < 100 || code > 599) {
                        findings.push_back({"idiomatic-correctness", tc.name,
                                            "status_equals expects a 3-digit status, got '" + a.expected + "'"});
                    }
                }
                if (a.kind == AssertionKind::StatusClassEquals) {
                    static const std::set<std::string> classes = {"1xx", "2xx", "3xx", "4xx", "5xx"};
                    if (classes.count(to_lower(a.expected)) == 0) {
                        findings.push_back({"idiomatic-correctness", tc.name,
                                            "status_class_equals expects one of 1xx..5xx, got '" + a.expected + "'"});
                    }
                }
            }
            for (const auto& [var, selector] : tc.steps[i].captures) {
                bool ok = selector == "status" || selector == "body" || starts_with(selector, "body.") ||
                          starts_with(selector, "header:");
                if (!ok) {
                    findings.push_back({"idiomatic-correctness", tc.name,
                                        "capture '" + var + "' uses unknown selector '" + selector + "'"});
                }
            }
        }
    }
    return findings;
}

TestSuite merge_suites(const TestSuite& base, const TestSuite& generated) {
    TestSuite merged = base;
    std::set<std::string> names;
    for (const auto& tc : merged.cases) names.insert(tc.name);
    for (const auto& tc : generated.cases) {
        TestCase copy = tc;
        if (names.count(copy.name) > 0) {
            int suffix = 2;
            while (names.count(copy.name + "_" + std::to_string(suffix)) > 0) ++suffix;
            copy.name += "_" + std::to_string(suffix);
        }
        names.insert(copy.name);
        merged.cases.push_back(std::move(copy));
    }
    return merged;
}

bool structurally_equal(const TestSuite& a, const TestSuite& b) {
    return suite_to_json(a) == suite_to_json(b);
}

}  // namespace restamp
