#include "restamp/http_runner.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <sstream>

#include "restamp/body_query.hpp"
#include "restamp/util.hpp"

namespace restamp {

namespace {

class StepFault : public Error {
public:
    using Error::Error;
};

std::string url_encode(const std::string& value) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : value) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0xf];
        }
    }
    return out;
}

// ${name} references resolve against captured variables.
std::string resolve_refs(const std::string& text, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t open = text.find("${", pos);
        if (open == std::string::npos) {
            out.append(text.substr(pos));
            break;
        }
        std::size_t close = text.find('}', open + 2);
        if (close == std::string::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, open - pos));
        std::string name = text.substr(open + 2, close - open - 2);
        auto it = vars.find(name);
        if (it == vars.end()) {
            throw StepFault("capture variable '" + name + "' is not bound");
        }
        out.append(it->second);
        pos = close + 1;
    }
    return out;
}

std::string guess_mime(const std::filesystem::path& file) {
    std::string ext = to_lower(file.extension().string());
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".gif") return "image/gif";
    if (ext == ".json") return "application/json";
    if (ext == ".xml") return "application/xml";
    if (ext == ".txt") return "text/plain";
    return "application/octet-stream";
}

struct PreparedRequest {
    std::string method;
    std::string path;   // resolved, no query
    std::string query;  // encoded query string, may be empty
    httplib::Headers headers;
    std::string body;
    std::string content_type;
    httplib::MultipartFormDataItems multipart;
    bool is_multipart = false;

    std::string url() const { return query.empty() ? path : path + "?" + query; }
};

struct ResponseData {
    int status = 0;
    std::string content_type;
    std::string body;
    httplib::Headers headers;
};

std::string header_value(const httplib::Headers& headers, const std::string& name) {
    auto it = headers.find(name);
    return it == headers.end() ? std::string() : it->second;
}

class SuiteRunner {
public:
    SuiteRunner(const TestSuite& suite, const std::string& target, const RunOptions& options)
        : suite_(suite), options_(options), client_(target.c_str()) {
        client_.set_connection_timeout(std::chrono::milliseconds(static_cast<int>(options.timeout_s * 1000)));
        client_.set_read_timeout(std::chrono::milliseconds(static_cast<int>(options.timeout_s * 1000)));
        client_.set_write_timeout(std::chrono::milliseconds(static_cast<int>(options.timeout_s * 1000)));
        client_.set_keep_alive(true);
        log_.target = target;
    }

    std::pair<ExecutionReport, InteractionLog> run() {
        ExecutionReport report;
        for (const auto& tc : suite_.cases) {
            auto start = std::chrono::steady_clock::now();
            CaseResult result = run_case(tc);
            auto end = std::chrono::steady_clock::now();
            result.duration_ms =
                options_.zero_durations
                    ? 0.0
                    : std::chrono::duration_cast<std::chrono::microseconds>(end - start).count() / 1000.0;
            switch (result.verdict) {
                case Verdict::Passed: ++report.passed; break;
                case Verdict::Failed: ++report.failed; break;
                case Verdict::Errored: ++report.errored; break;
            }
            report.cases.push_back(std::move(result));
        }
        return {std::move(report), std::move(log_)};
    }

private:
    CaseResult run_case(const TestCase& tc) {
        CaseResult result;
        result.name = tc.name;
        for (std::size_t i = 0; i < tc.steps.size(); ++i) {
            const TestStep& step = tc.steps[i];
            StepOutcome outcome;
            try {
                PreparedRequest request = prepare(step, outcome);
                ResponseData response = dispatch(request);
                record(step, request, response, outcome);
                result.steps.push_back(outcome);

                evaluate_captures(step, response, result.steps.back());
                auto failures = evaluate_assertions(step, static_cast<int>(i), response, result.steps.back());
                if (!failures.empty()) {
                    result.verdict = Verdict::Failed;
                    result.failed_step = static_cast<int>(i);
                    result.failures = std::move(failures);
                    return result;
                }
            } catch (const StepFault& fault) {
                result.verdict = Verdict::Errored;
                result.failed_step = static_cast<int>(i);
                result.fault = fault.what();
                if (result.steps.size() == i + 1) {
                    // keep the partially-filled outcome for the trace
                } else {
                    result.steps.push_back(outcome);
                }
                return result;
            }
        }
        return result;
    }

    PreparedRequest prepare(const TestStep& step, StepOutcome& outcome) {
        PreparedRequest request;
        request.method = step.method;
        outcome.method = step.method;

        std::map<std::string, std::string> explicit_params;
        for (const auto& [k, v] : step.path_params) explicit_params[k] = resolve_refs(v, vars_);

        std::string path = step.path;
        for (const auto& placeholder : path_placeholders(step.path)) {
            std::string value;
            bool via_capture = false;
            auto it = explicit_params.find(placeholder);
            if (it != explicit_params.end()) {
                value = it->second;
                via_capture = step_value_uses_capture(step, placeholder);
            } else {
                auto var = vars_.find(placeholder);
                if (var == vars_.end()) {
                    throw StepFault("path parameter '{" + placeholder + "}' is unbound");
                }
                value = var->second;
                via_capture = true;
            }
            outcome.path_bindings[placeholder] = {value, via_capture};
            std::string token = "{" + placeholder + "}";
            std::size_t pos;
            while ((pos = path.find(token)) != std::string::npos) {
                path.replace(pos, token.size(), url_encode(value));
            }
        }
        request.path = path;

        std::string query;
        for (const auto& [k, v] : step.query_params) {
            if (!query.empty()) query += "&";
            query += url_encode(k) + "=" + url_encode(resolve_refs(v, vars_));
        }
        request.query = query;

        for (const auto& [k, v] : suite_.base_headers) request.headers.emplace(k, resolve_refs(v, vars_));
        for (const auto& [k, v] : step.headers) {
            request.headers.erase(k);
            request.headers.emplace(k, resolve_refs(v, vars_));
        }

        if (step.body) {
            request.content_type = step.body->content_type;
            if (normalize_content_type(request.content_type) == "multipart/form-data") {
                request.is_multipart = true;
                for (const auto& [k, v] : step.form_params) {
                    request.multipart.push_back({k, resolve_refs(v, vars_), "", ""});
                }
                if (!step.body->file_ref.empty()) {
                    std::filesystem::path file = options_.asset_root / step.body->file_ref;
                    if (!std::filesystem::exists(file)) {
                        throw StepFault("asset file not found: " + step.body->file_ref);
                    }
                    request.multipart.push_back({step.body->file_part, read_file(file),
                                                 file.filename().string(), guess_mime(file)});
                }
            } else if (!step.body->file_ref.empty()) {
                std::filesystem::path file = options_.asset_root / step.body->file_ref;
                if (!std::filesystem::exists(file)) {
                    throw StepFault("asset file not found: " + step.body->file_ref);
                }
                request.body = read_file(file);
            } else {
                request.body = resolve_refs(step.body->payload, vars_);
            }
        } else if (!step.form_params.empty()) {
            request.content_type = "application/x-www-form-urlencoded";
            std::string body;
            for (const auto& [k, v] : step.form_params) {
                if (!body.empty()) body += "&";
                body += url_encode(k) + "=" + url_encode(resolve_refs(v, vars_));
            }
            request.body = body;
        }
        return request;
    }

    static bool step_value_uses_capture(const TestStep& step, const std::string& placeholder) {
        for (const auto& [k, v] : step.path_params) {
            if (k == placeholder) return v.find("${") != std::string::npos;
        }
        return false;
    }

    ResponseData dispatch(const PreparedRequest& request) {
        httplib::Result result(nullptr, httplib::Error::Unknown);
        std::string target = request.url();
        for (int attempt = 0; attempt <= options_.retries; ++attempt) {
            if (request.is_multipart) {
                if (request.method != "POST") {
                    throw StepFault("multipart bodies are only supported for POST");
                }
                result = client_.Post(target, request.headers, request.multipart);
            } else if (request.method == "GET") {
                result = client_.Get(target, request.headers);
            } else if (request.method == "HEAD") {
                result = client_.Head(target, request.headers);
            } else if (request.method == "POST") {
                result = client_.Post(target, request.headers, request.body, request.content_type);
            } else if (request.method == "PUT") {
                result = client_.Put(target, request.headers, request.body, request.content_type);
            } else if (request.method == "PATCH") {
                result = client_.Patch(target, request.headers, request.body, request.content_type);
            } else if (request.method == "DELETE") {
                result = client_.Delete(target, request.headers, request.body, request.content_type);
            } else {
                throw StepFault("unsupported method: " + request.method);
            }
            if (result) break;
        }
        if (!result) {
            throw StepFault("transport failure: " + httplib::to_string(result.error()));
        }
        ResponseData response;
        response.status = result->status;
        response.body = result->body;
        response.headers = result->headers;
        response.content_type = header_value(result->headers, "Content-Type");
        return response;
    }

    void record(const TestStep& step, const PreparedRequest& request, const ResponseData& response,
                StepOutcome& outcome) {
        InteractionRecord rec;
        rec.sequence = static_cast<int>(log_.records.size()) + 1;
        rec.method = request.method;
        rec.url = request.url();
        rec.request_content_type =
            request.is_multipart ? "multipart/form-data" : normalize_content_type(request.content_type);
        for (const auto& [name, binding] : outcome.path_bindings) rec.path_param_names.push_back(name);
        for (const auto& [k, v] : step.query_params) rec.query_param_names.push_back(k);
        for (const auto& [k, v] : step.headers) rec.header_param_names.push_back(k);
        for (const auto& [k, v] : suite_.base_headers) {
            if (std::find(rec.header_param_names.begin(), rec.header_param_names.end(), k) ==
                rec.header_param_names.end()) {
                rec.header_param_names.push_back(k);
            }
        }
        for (const auto& [k, v] : step.form_params) rec.form_param_names.push_back(k);
        rec.status = response.status;
        rec.response_content_type = normalize_content_type(response.content_type);
        rec.body_digest = to_hex64(fnv1a64(response.body));
        if (options_.index != nullptr) {
            auto matched = match_path(*options_.index, rec.method, rec.url);
            rec.matched_template = matched.value_or("unmatched");
        } else {
            rec.matched_template = "unmatched";
        }
        outcome.url = rec.url;
        outcome.status = rec.status;
        outcome.matched_template = rec.matched_template;
        log_.records.push_back(std::move(rec));
    }

    void evaluate_captures(const TestStep& step, const ResponseData& response, StepOutcome& outcome) {
        for (const auto& [var, selector] : step.captures) {
            std::string value;
            if (selector == "status") {
                value = std::to_string(response.status);
            } else if (starts_with(selector, "header:")) {
                std::string name = selector.substr(7);
                value = header_value(response.headers, name);
                if (value.empty()) {
                    throw StepFault("capture selector unresolvable: no header '" + name + "'");
                }
            } else if (selector == "body") {
                value = response.body;
            } else if (starts_with(selector, "body.")) {
                auto field = query_body(response.body, response.content_type, selector.substr(5));
                if (!field) {
                    throw StepFault("capture selector unresolvable: '" + selector + "'");
                }
                value = *field;
            } else {
                throw StepFault("capture selector unresolvable: unknown form '" + selector + "'");
            }
            vars_[var] = value;
            outcome.captured_values[var] = value;
        }
    }

    std::vector<AssertionFailure> evaluate_assertions(const TestStep& step, int step_index,
                                                      const ResponseData& response, StepOutcome& outcome) {
        std::vector<AssertionFailure> failures;
        for (const auto& assertion : step.assertions) {
            std::string expected = resolve_refs(assertion.expected, vars_);
            bool ok = true;
            std::string actual;
            switch (assertion.kind) {
                case AssertionKind::StatusEquals: {
                    actual = std::to_string(response.status);
                    ok = actual == expected;
                    break;
                }
                case AssertionKind::StatusClassEquals: {
                    int cls = response.status / 100;
                    actual = std::to_string(cls) + "xx";
                    ok = !expected.empty() && expected[0] == ('0' + cls);
                    break;
                }
                case AssertionKind::HeaderContains: {
                    actual = header_value(response.headers, assertion.header);
                    ok = actual.find(expected) != std::string::npos;
                    break;
                }
                case AssertionKind::ContentTypeEquals: {
                    actual = normalize_content_type(response.content_type);
                    ok = actual == normalize_content_type(expected);
                    break;
                }
                case AssertionKind::BodyFieldEquals: {
                    auto field = query_body(response.body, response.content_type, assertion.selector);
                    actual = field.value_or("<absent>");
                    ok = field.has_value() && *field == expected;
                    outcome.asserted_body_literals.push_back(expected);
                    break;
                }
                case AssertionKind::BodyFieldExists: {
                    bool exists = body_field_exists(response.body, response.content_type, assertion.selector);
                    actual = exists ? "present" : "<absent>";
                    ok = exists;
                    break;
                }
            }
            if (!ok) {
                failures.push_back({step_index, assertion.kind, assertion.selector, expected, actual});
            }
        }
        return failures;
    }

    const TestSuite& suite_;
    const RunOptions& options_;
    httplib::Client client_;
    InteractionLog log_;
    std::map<std::string, std::string> vars_;
};

std::vector<std::string> segments_of(const std::string& path) {
    std::vector<std::string> segments;
    for (const auto& part : split(path, '/')) {
        if (!part.empty()) segments.push_back(part);
    }
    return segments;
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Passed: return "passed";
        case Verdict::Failed: return "failed";
        case Verdict::Errored: return "errored";
    }
    return "errored";
}

std::pair<ExecutionReport, InteractionLog> run_suite(const TestSuite& suite, const std::string& target_base_url,
                                                     const RunOptions& options) {
    SuiteRunner runner(suite, target_base_url, options);
    return runner.run();
}

std::optional<std::string> match_path(const SpecIndex& index, const std::string& method,
                                      const std::string& concrete_url) {
    std::string path = concrete_url;
    std::size_t q = path.find('?');
    if (q != std::string::npos) path.resize(q);
    const std::vector<std::string> url_segments = segments_of(path);

    const PathEntry* best = nullptr;
    int best_literals = -1;
    std::string upper_method = to_upper(method);
    for (const auto& entry : index.paths) {
        if (entry.find_operation(upper_method) == nullptr) continue;
        std::vector<std::string> template_segments = segments_of(entry.path_template);
        if (template_segments.size() != url_segments.size()) continue;
        bool matches = true;
        int literals = 0;
        for (std::size_t i = 0; i < template_segments.size(); ++i) {
            const std::string& seg = template_segments[i];
            if (seg.size() >= 2 && seg.front() == '{' && seg.back() == '}') {
                if (url_segments[i].empty()) {
                    matches = false;
                    break;
                }
            } else {
                if (seg != url_segments[i]) {
                    matches = false;
                    break;
                }
                ++literals;
            }
        }
        if (matches && literals > best_literals) {  // ties keep the earlier (document order) entry
            best = &entry;
            best_literals = literals;
        }
    }
    if (best == nullptr) return std::nullopt;
    return best->path_template;
}

Json ExecutionReport::to_json() const {
    Json jcases = Json::array();
    for (const auto& c : cases) {
        Json jc = Json::object();
        jc["name"] = c.name;
        jc["verdict"] = to_string(c.verdict);
        jc["duration_ms"] = c.duration_ms;
        if (!c.fault.empty()) jc["fault"] = c.fault;
        if (c.failed_step >= 0) jc["failed_step"] = c.failed_step;
        if (!c.failures.empty()) {
            Json jf = Json::array();
            for (const auto& f : c.failures) {
                Json entry{{"step", f.step},
                           {"kind", to_string(f.kind)},
                           {"expected", f.expected},
                           {"actual", f.actual}};
                if (!f.selector.empty()) entry["selector"] = f.selector;
                jf.push_back(std::move(entry));
            }
            jc["failures"] = std::move(jf);
        }
        Json jsteps = Json::array();
        for (const auto& s : c.steps) {
            Json js{{"method", s.method},
                    {"url", s.url},
                    {"template", s.matched_template},
                    {"status", s.status}};
            if (!s.path_bindings.empty()) {
                Json jb = Json::object();
                for (const auto& [name, binding] : s.path_bindings) {
                    jb[name] = Json{{"value", binding.value}, {"via_capture", binding.via_capture}};
                }
                js["path_bindings"] = std::move(jb);
            }
            if (!s.captured_values.empty()) {
                Json jcv = Json::object();
                for (const auto& [k, v] : s.captured_values) jcv[k] = v;
                js["captured"] = std::move(jcv);
            }
            if (!s.asserted_body_literals.empty()) js["asserted_body_literals"] = s.asserted_body_literals;
            jsteps.push_back(std::move(js));
        }
        jc["steps"] = std::move(jsteps);
        jcases.push_back(std::move(jc));
    }
    return Json{{"cases", jcases},
                {"totals", Json{{"passed", passed}, {"failed", failed}, {"errored", errored}}}};
}

ExecutionReport ExecutionReport::from_json(const Json& doc) {
    ExecutionReport report;
    for (const auto& jc : doc.at("cases")) {
        CaseResult c;
        c.name = jc.value("name", "");
        std::string verdict = jc.value("verdict", "errored");
        c.verdict = verdict == "passed" ? Verdict::Passed : verdict == "failed" ? Verdict::Failed : Verdict::Errored;
        c.duration_ms = jc.value("duration_ms", 0.0);
        c.fault = jc.value("fault", "");
        c.failed_step = jc.value("failed_step", -1);
        if (jc.contains("failures")) {
            for (const auto& jf : jc.at("failures")) {
                AssertionFailure f;
                f.step = jf.value("step", 0);
                f.kind = assertion_kind_from_string(jf.value("kind", "status_equals"))
                             .value_or(AssertionKind::StatusEquals);
                f.selector = jf.value("selector", "");
                f.expected = jf.value("expected", "");
                f.actual = jf.value("actual", "");
                c.failures.push_back(std::move(f));
            }
        }
        if (jc.contains("steps")) {
            for (const auto& js : jc.at("steps")) {
                StepOutcome s;
                s.method = js.value("method", "");
                s.url = js.value("url", "");
                s.matched_template = js.value("template", "unmatched");
                s.status = js.value("status", 0);
                if (js.contains("path_bindings")) {
                    for (const auto& [name, jb] : js.at("path_bindings").items()) {
                        s.path_bindings[name] = {jb.value("value", ""), jb.value("via_capture", false)};
                    }
                }
                if (js.contains("captured")) {
                    for (const auto& [k, v] : js.at("captured").items()) {
                        s.captured_values[k] = v.get<std::string>();
                    }
                }
                if (js.contains("asserted_body_literals")) {
                    for (const auto& v : js.at("asserted_body_literals")) {
                        s.asserted_body_literals.push_back(v.get<std::string>());
                    }
                }
                c.steps.push_back(std::move(s));
            }
        }
        report.cases.push_back(std::move(c));
    }
    const Json& totals = doc.at("totals");
    report.passed = totals.value("passed", 0);
    report.failed = totals.value("failed", 0);
    report.errored = totals.value("errored", 0);
    return report;
}

std::string ExecutionReport::render_text() const {
    std::ostringstream out;
    out << passed << " passed, " << failed << " failed, " << errored << " errored\n";
    for (const auto& c : cases) {
        if (c.verdict == Verdict::Passed) continue;
        if (c.verdict == Verdict::Errored) {
            out << "ERRORED " << c.name << ": " << c.fault << "\n";
            continue;
        }
        for (const auto& f : c.failures) {
            out << "FAILED " << c.name << ": step " << f.step << " " << to_string(f.kind);
            if (!f.selector.empty()) out << " " << f.selector;
            out << " expected " << f.expected << ", actual " << f.actual << "\n";
        }
    }
    return out.str();
}

Json InteractionRecord::to_json() const {
    return Json{{"seq", sequence},
                {"method", method},
                {"template", matched_template},
                {"url", url},
                {"request_content_type", request_content_type},
                {"params",
                 Json{{"path", path_param_names},
                      {"query", query_param_names},
                      {"header", header_param_names},
                      {"form", form_param_names}}},
                {"status", status},
                {"response_content_type", response_content_type},
                {"body_digest", body_digest}};
}

InteractionRecord InteractionRecord::from_json(const Json& doc) {
    InteractionRecord rec;
    rec.sequence = doc.value("seq", 0);
    rec.method = doc.value("method", "");
    rec.matched_template = doc.value("template", "unmatched");
    rec.url = doc.value("url", "");
    rec.request_content_type = doc.value("request_content_type", "");
    if (doc.contains("params")) {
        const Json& params = doc.at("params");
        auto read = [&params](const char* key) {
            std::vector<std::string> out;
            if (params.contains(key)) {
                for (const auto& v : params.at(key)) out.push_back(v.get<std::string>());
            }
            return out;
        };
        rec.path_param_names = read("path");
        rec.query_param_names = read("query");
        rec.header_param_names = read("header");
        rec.form_param_names = read("form");
    }
    rec.status = doc.value("status", 0);
    rec.response_content_type = doc.value("response_content_type", "");
    rec.body_digest = doc.value("body_digest", "");
    return rec;
}

std::string serialize_log(const InteractionLog& log) {
    std::ostringstream out;
    out << Json{{"target", log.target}}.dump() << "\n";
    for (const auto& rec : log.records) {
        out << rec.to_json().dump() << "\n";
    }
    return out.str();
}

InteractionLog parse_log(const std::string& text) {
    InteractionLog log;
    for (const auto& line : split(text, '\n')) {
        std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        Json doc = Json::parse(trimmed);
        if (doc.contains("target")) {
            log.target = doc.at("target").get<std::string>();
            continue;
        }
        log.records.push_back(InteractionRecord::from_json(doc));
    }
    return log;
}

InteractionLog load_log_file(const std::filesystem::path& path) {
    return parse_log(read_file(path));
}

}  // namespace restamp
