#include "restamp/spec_index.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

namespace restamp {

namespace {

const std::set<std::string> kBodyBearingMethods = {"POST", "PUT", "PATCH"};
const std::vector<std::string> kKnownMethods = {"get", "put", "post", "delete", "options", "head", "patch"};

Json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Scalar: {
            const std::string& s = node.Scalar();
            if (node.Tag() == "!") {  // quoted scalar stays a string
                return s;
            }
            if (s == "null" || s == "~" || s.empty()) return nullptr;
            if (s == "true") return true;
            if (s == "false") return false;
            char* end = nullptr;
            errno = 0;
            long long iv = std::strtoll(s.c_str(), &end, 10);
            if (end && *end == '\0' && errno == 0) return iv;
            errno = 0;
            double dv = std::strtod(s.c_str(), &end);
            if (end && *end == '\0' && errno == 0) return dv;
            return s;
        }
        case YAML::NodeType::Sequence: {
            Json arr = Json::array();
            for (const auto& item : node) arr.push_back(yaml_to_json(item));
            return arr;
        }
        case YAML::NodeType::Map: {
            Json obj = Json::object();
            for (const auto& kv : node) obj[kv.first.Scalar()] = yaml_to_json(kv.second);
            return obj;
        }
    }
    return nullptr;
}

// Local-only $ref resolution ("#/definitions/Pet"). Remote and file refs are
// rejected so a loaded index never depends on anything outside the document.
const Json* resolve_pointer(const Json& document, const std::string& ref) {
    if (!starts_with(ref, "#/")) {
        throw SpecError(SpecError::Kind::Reference, "only local $ref is supported: " + ref);
    }
    const Json* cur = &document;
    for (const auto& raw : split(ref.substr(2), '/')) {
        std::string key = raw;
        std::size_t pos = 0;
        while ((pos = key.find("~1", pos)) != std::string::npos) key.replace(pos, 2, "/");
        pos = 0;
        while ((pos = key.find("~0", pos)) != std::string::npos) key.replace(pos, 2, "~");
        if (!cur->is_object() || !cur->contains(key)) {
            throw SpecError(SpecError::Kind::Reference, "dangling $ref: " + ref);
        }
        cur = &cur->at(key);
    }
    return cur;
}

const Json& deref(const Json& document, const Json& node) {
    if (node.is_object() && node.contains("$ref")) {
        return *resolve_pointer(document, node.at("$ref").get<std::string>());
    }
    return node;
}

std::string literal_text(const Json& value) {
    if (value.is_string()) return value.get<std::string>();
    return value.dump();
}

ValueKind parse_value_kind(const Json& document, const Json& schema_like) {
    ValueKind vk;
    const Json& schema = deref(document, schema_like);
    if (schema_like.is_object() && schema_like.contains("$ref")) {
        vk.kind = "object";
        auto parts = split(schema_like.at("$ref").get<std::string>(), '/');
        vk.format = parts.empty() ? "" : parts.back();
        return vk;
    }
    vk.kind = schema.value("type", "object");
    vk.format = schema.value("format", "");
    if (schema.contains("enum")) {
        for (const auto& v : schema.at("enum")) vk.enum_values.push_back(literal_text(v));
    }
    if (schema.contains("minimum")) vk.minimum = schema.at("minimum").get<double>();
    if (schema.contains("maximum")) vk.maximum = schema.at("maximum").get<double>();
    return vk;
}

std::vector<std::string> string_list(const Json& node) {
    std::vector<std::string> out;
    for (const auto& v : node) out.push_back(v.get<std::string>());
    return out;
}

int parse_status_code(const std::string& key) {
    if (key.size() != 3 || !std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return -1;
    }
    int code = std::stoi(key);
    return (code >= 100 && code <= 599) ? code : -1;
}

ParameterEntry parse_parameter_v2(const Json& document, const Json& raw) {
    const Json& p = deref(document, raw);
    ParameterEntry entry;
    entry.name = p.value("name", "");
    std::string loc = p.value("in", "");
    if (loc == "path") entry.location = ParamLocation::Path;
    else if (loc == "query") entry.location = ParamLocation::Query;
    else if (loc == "header") entry.location = ParamLocation::Header;
    else if (loc == "formData") entry.location = ParamLocation::Form;
    entry.required = p.value("required", false) || entry.location == ParamLocation::Path;
    if (p.contains("schema")) {
        entry.value_kind = parse_value_kind(document, p.at("schema"));
    } else {
        entry.value_kind = parse_value_kind(document, p);
    }
    return entry;
}

void validate_operation(const PathEntry& path, const OperationEntry& op) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& p : op.parameters) {
        if (p.location == ParamLocation::Path && !p.required) {
            throw SpecError(SpecError::Kind::Parse, "path parameter '" + p.name + "' on " + op.method + " " +
                                                        path.path_template + " must be required");
        }
        if (!seen.insert({p.name, to_string(p.location)}).second) {
            throw SpecError(SpecError::Kind::Parse, "duplicate parameter '" + p.name + "' on " + op.method + " " +
                                                        path.path_template);
        }
    }
    if (!op.request_types.empty() && kBodyBearingMethods.count(op.method) == 0) {
        throw SpecError(SpecError::Kind::Parse,
                        "request body types declared on non-body method " + op.method + " " + path.path_template);
    }
}

SchemaDigest parse_definition(const Json& document, const std::string& name, const Json& schema) {
    SchemaDigest digest;
    digest.name = name;
    std::set<std::string> required;
    if (schema.contains("required")) {
        for (const auto& r : schema.at("required")) required.insert(r.get<std::string>());
    }
    if (schema.contains("properties")) {
        for (const auto& [prop_name, prop_schema] : schema.at("properties").items()) {
            SchemaProperty prop;
            prop.name = prop_name;
            prop.kind = parse_value_kind(document, prop_schema);
            prop.required = required.count(prop_name) > 0;
            digest.properties.push_back(std::move(prop));
            const Json& resolved = deref(document, prop_schema);
            if (resolved.contains("example")) {
                digest.example_values[prop_name] = resolved.at("example");
            }
        }
    }
    return digest;
}

void load_paths_v2(const Json& document, SpecIndex& index) {
    std::vector<std::string> global_consumes;
    std::vector<std::string> global_produces;
    if (document.contains("consumes")) global_consumes = string_list(document.at("consumes"));
    if (document.contains("produces")) global_produces = string_list(document.at("produces"));

    for (const auto& [template_str, path_node] : document.at("paths").items()) {
        if (template_str.empty() || template_str[0] != '/') {
            throw SpecError(SpecError::Kind::Parse, "path template must begin with '/': " + template_str);
        }
        if (index.find_path(template_str) != nullptr) {
            throw SpecError(SpecError::Kind::Reference, "duplicate path template: " + template_str);
        }
        PathEntry path;
        path.path_template = template_str;
        std::vector<ParameterEntry> shared_params;
        if (path_node.contains("parameters")) {
            for (const auto& raw : path_node.at("parameters")) {
                shared_params.push_back(parse_parameter_v2(document, raw));
            }
        }
        for (const auto& method : kKnownMethods) {
            if (!path_node.contains(method)) continue;
            const Json& op_node = path_node.at(method);
            OperationEntry op;
            op.method = to_upper(method);
            op.operation_id = op_node.value("operationId", "");
            op.parameters = shared_params;
            if (op_node.contains("parameters")) {
                for (const auto& raw : op_node.at("parameters")) {
                    const Json& p = deref(document, raw);
                    if (p.value("in", "") == "body") {
                        if (p.contains("schema")) parse_value_kind(document, p.at("schema"));  // validates refs
                        continue;  // bodies count toward request types, not parameters
                    }
                    op.parameters.push_back(parse_parameter_v2(document, raw));
                }
            }
            if (kBodyBearingMethods.count(op.method) > 0) {
                op.request_types =
                    op_node.contains("consumes") ? string_list(op_node.at("consumes")) : global_consumes;
            }
            std::vector<std::string> produces =
                op_node.contains("produces") ? string_list(op_node.at("produces")) : global_produces;
            if (op_node.contains("responses")) {
                for (const auto& [code_key, resp_raw] : op_node.at("responses").items()) {
                    int code = parse_status_code(code_key);
                    if (code < 0) continue;  // "default" and friends carry no coverage target
                    const Json& resp = deref(document, resp_raw);
                    ResponseEntry entry;
                    entry.status = code;
                    entry.description = resp.value("description", "");
                    entry.content_types = produces;
                    if (resp.contains("schema")) parse_value_kind(document, resp.at("schema"));  // validates refs
                    op.responses.push_back(std::move(entry));
                }
            }
            validate_operation(path, op);
            path.operations.emplace_back(op.method, std::move(op));
        }
        index.paths.push_back(std::move(path));
    }
    if (document.contains("definitions")) {
        for (const auto& [name, schema] : document.at("definitions").items()) {
            index.definitions.push_back(parse_definition(document, name, deref(document, schema)));
        }
    }
}

void load_paths_v3(const Json& document, SpecIndex& index) {
    for (const auto& [template_str, path_node] : document.at("paths").items()) {
        if (template_str.empty() || template_str[0] != '/') {
            throw SpecError(SpecError::Kind::Parse, "path template must begin with '/': " + template_str);
        }
        if (index.find_path(template_str) != nullptr) {
            throw SpecError(SpecError::Kind::Reference, "duplicate path template: " + template_str);
        }
        PathEntry path;
        path.path_template = template_str;
        for (const auto& method : kKnownMethods) {
            if (!path_node.contains(method)) continue;
            const Json& op_node = path_node.at(method);
            OperationEntry op;
            op.method = to_upper(method);
            op.operation_id = op_node.value("operationId", "");
            if (op_node.contains("parameters")) {
                for (const auto& raw : op_node.at("parameters")) {
                    const Json& p = deref(document, raw);
                    std::string loc = p.value("in", "");
                    if (loc == "cookie") continue;
                    ParameterEntry entry;
                    entry.name = p.value("name", "");
                    if (loc == "path") entry.location = ParamLocation::Path;
                    else if (loc == "header") entry.location = ParamLocation::Header;
                    else entry.location = ParamLocation::Query;
                    entry.required = p.value("required", false) || entry.location == ParamLocation::Path;
                    if (p.contains("schema")) entry.value_kind = parse_value_kind(document, p.at("schema"));
                    op.parameters.push_back(std::move(entry));
                }
            }
            if (op_node.contains("requestBody")) {
                const Json& body = deref(document, op_node.at("requestBody"));
                if (body.contains("content")) {
                    for (const auto& [ct, media] : body.at("content").items()) {
                        op.request_types.push_back(ct);
                        if (media.contains("schema")) parse_value_kind(document, media.at("schema"));
                    }
                }
            }
            if (op_node.contains("responses")) {
                for (const auto& [code_key, resp_raw] : op_node.at("responses").items()) {
                    int code = parse_status_code(code_key);
                    if (code < 0) continue;
                    const Json& resp = deref(document, resp_raw);
                    ResponseEntry entry;
                    entry.status = code;
                    entry.description = resp.value("description", "");
                    if (resp.contains("content")) {
                        for (const auto& [ct, media] : resp.at("content").items()) {
                            entry.content_types.push_back(ct);
                            if (media.contains("schema")) parse_value_kind(document, media.at("schema"));
                        }
                    }
                    op.responses.push_back(std::move(entry));
                }
            }
            validate_operation(path, op);
            path.operations.emplace_back(op.method, std::move(op));
        }
        index.paths.push_back(std::move(path));
    }
    if (document.contains("components") && document.at("components").contains("schemas")) {
        for (const auto& [name, schema] : document.at("components").at("schemas").items()) {
            index.definitions.push_back(parse_definition(document, name, deref(document, schema)));
        }
    }
}

void append_budgeted(std::string& text, std::size_t char_budget) {
    static const std::string marker = "\n...[truncated]";
    if (text.size() > char_budget) {
        std::size_t keep = char_budget > marker.size() ? char_budget - marker.size() : 0;
        text.resize(keep);
        text += marker;
    }
}

std::string render_value_kind(const ValueKind& vk) {
    std::string out = vk.kind;
    if (!vk.format.empty()) out += "(" + vk.format + ")";
    if (!vk.enum_values.empty()) {
        out += " enum[";
        for (std::size_t i = 0; i < vk.enum_values.size(); ++i) {
            if (i) out += ", ";
            out += vk.enum_values[i];
        }
        out += "]";
    }
    if (vk.minimum) out += " min=" + std::to_string(static_cast<long long>(*vk.minimum));
    if (vk.maximum) out += " max=" + std::to_string(static_cast<long long>(*vk.maximum));
    return out;
}

}  // namespace

std::string to_string(ParamLocation loc) {
    switch (loc) {
        case ParamLocation::Path: return "path";
        case ParamLocation::Query: return "query";
        case ParamLocation::Header: return "header";
        case ParamLocation::Form: return "form";
    }
    return "query";
}

std::optional<ParamLocation> param_location_from_string(std::string_view s) {
    if (s == "path") return ParamLocation::Path;
    if (s == "query") return ParamLocation::Query;
    if (s == "header") return ParamLocation::Header;
    if (s == "form") return ParamLocation::Form;
    return std::nullopt;
}

const ResponseEntry* OperationEntry::find_response(int status) const {
    for (const auto& r : responses) {
        if (r.status == status) return &r;
    }
    return nullptr;
}

const OperationEntry* PathEntry::find_operation(std::string_view method) const {
    for (const auto& [m, op] : operations) {
        if (m == method) return &op;
    }
    return nullptr;
}

const PathEntry* SpecIndex::find_path(std::string_view path_template) const {
    for (const auto& p : paths) {
        if (p.path_template == path_template) return &p;
    }
    return nullptr;
}

const OperationEntry* SpecIndex::find_operation(std::string_view path_template, std::string_view method) const {
    const PathEntry* p = find_path(path_template);
    return p ? p->find_operation(method) : nullptr;
}

const SchemaDigest* SpecIndex::find_definition(std::string_view name) const {
    for (const auto& d : definitions) {
        if (d.name == name) return &d;
    }
    return nullptr;
}

SpecIndex load_spec(const std::string& document_text, SpecFormat format) {
    Json document;
    if (format == SpecFormat::Json) {
        try {
            document = Json::parse(document_text);
        } catch (const nlohmann::json::parse_error& e) {
            throw SpecError(SpecError::Kind::Parse, std::string("malformed JSON document: ") + e.what());
        }
    } else {
        try {
            document = yaml_to_json(YAML::Load(document_text));
        } catch (const YAML::Exception& e) {
            throw SpecError(SpecError::Kind::Parse, std::string("malformed YAML document: ") + e.what());
        }
    }
    if (!document.is_object()) {
        throw SpecError(SpecError::Kind::Parse, "document root must be an object");
    }

    SpecIndex index;
    if (document.contains("swagger")) {
        std::string v = literal_text(document.at("swagger"));
        if (v != "2.0") {
            throw SpecError(SpecError::Kind::Dialect, "unsupported Swagger version: " + v);
        }
        index.source_version = "2.0";
        if (document.contains("paths")) load_paths_v2(document, index);
    } else if (document.contains("openapi")) {
        std::string v = literal_text(document.at("openapi"));
        if (!starts_with(v, "3.")) {
            throw SpecError(SpecError::Kind::Dialect, "unsupported OpenAPI version: " + v);
        }
        index.source_version = v;
        if (document.contains("paths")) load_paths_v3(document, index);
    } else {
        throw SpecError(SpecError::Kind::Dialect, "document declares neither 'swagger' nor 'openapi'");
    }
    return index;
}

SpecIndex load_spec_file(const std::filesystem::path& path) {
    std::string ext = to_lower(path.extension().string());
    SpecFormat format = (ext == ".yaml" || ext == ".yml") ? SpecFormat::Yaml : SpecFormat::Json;
    return load_spec(read_file(path), format);
}

std::vector<std::string> list_paths(const SpecIndex& index) {
    std::vector<std::string> out;
    out.reserve(index.paths.size());
    for (const auto& p : index.paths) out.push_back(p.path_template);
    return out;
}

EndpointDigest describe_endpoint(const SpecIndex& index, const std::string& path, std::size_t char_budget) {
    EndpointDigest digest;
    digest.path = path;
    const PathEntry* entry = index.find_path(path);
    if (entry == nullptr) {
        std::ostringstream out;
        out << "No path '" << path << "' is documented in the OpenAPI specification. Known paths:";
        for (const auto& p : index.paths) out << " " << p.path_template;
        digest.text = out.str();
        append_budgeted(digest.text, char_budget);
        digest.structured = Json{{"path", path}, {"found", false}};
        return digest;
    }
    digest.found = true;

    std::ostringstream out;
    Json ops = Json::array();
    out << "Path " << path << "\n";
    for (const auto& [method, op] : entry->operations) {
        out << "  " << method;
        if (!op.operation_id.empty()) out << " (operationId " << op.operation_id << ")";
        out << "\n";
        Json jop{{"method", method}, {"operation_id", op.operation_id}};

        out << "    parameters:";
        Json jparams = Json::array();
        if (op.parameters.empty()) {
            out << " (none)";
        }
        out << "\n";
        for (const auto& p : op.parameters) {
            out << "      - " << p.name << " in " << to_string(p.location) << ", " << render_value_kind(p.value_kind)
                << (p.required ? ", required" : ", optional") << "\n";
            jparams.push_back(Json{{"name", p.name},
                                   {"in", to_string(p.location)},
                                   {"kind", p.value_kind.kind},
                                   {"required", p.required}});
        }
        jop["parameters"] = jparams;

        if (!op.request_types.empty()) {
            out << "    request types:";
            for (const auto& ct : op.request_types) out << " " << ct;
            out << "\n";
        }
        jop["request_types"] = op.request_types;

        std::vector<std::string> response_types;
        for (const auto& r : op.responses) {
            for (const auto& ct : r.content_types) {
                if (std::find(response_types.begin(), response_types.end(), ct) == response_types.end()) {
                    response_types.push_back(ct);
                }
            }
        }
        if (!response_types.empty()) {
            out << "    response types:";
            for (const auto& ct : response_types) out << " " << ct;
            out << "\n";
        }
        jop["response_types"] = response_types;

        out << "    statuses:\n";
        Json jstatuses = Json::array();
        for (const auto& r : op.responses) {
            out << "      - " << r.status << ": " << r.description << "\n";
            jstatuses.push_back(Json{{"status", r.status}, {"description", r.description}});
        }
        jop["statuses"] = jstatuses;
        ops.push_back(std::move(jop));
    }
    digest.text = out.str();
    append_budgeted(digest.text, char_budget);
    digest.structured = Json{{"path", path}, {"found", true}, {"operations", ops}};
    return digest;
}

DefinitionRendering describe_definition(const SpecIndex& index, const std::string& name, std::size_t char_budget) {
    DefinitionRendering rendering;
    rendering.name = name;
    const SchemaDigest* def = index.find_definition(name);
    if (def == nullptr) {
        std::ostringstream out;
        out << "No definition named '" << name << "' in the OpenAPI specification. Known definitions:";
        for (const auto& d : index.definitions) out << " " << d.name;
        rendering.text = out.str();
        append_budgeted(rendering.text, char_budget);
        rendering.structured = Json{{"name", name}, {"found", false}};
        return rendering;
    }
    rendering.found = true;

    std::ostringstream out;
    out << "Definition " << name << "\n  properties:\n";
    Json jprops = Json::array();
    for (const auto& p : def->properties) {
        out << "    - " << p.name << ": " << render_value_kind(p.kind) << (p.required ? ", required" : ", optional");
        auto example = def->example_values.find(p.name);
        if (example != def->example_values.end()) {
            out << ", example " << example->second.dump();
        }
        out << "\n";
        jprops.push_back(Json{{"name", p.name}, {"kind", p.kind.kind}, {"required", p.required}});
    }
    rendering.text = out.str();
    append_budgeted(rendering.text, char_budget);
    rendering.structured = Json{{"name", name}, {"found", true}, {"properties", jprops}};
    return rendering;
}

}  // namespace restamp
