#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "restamp/jsonx.hpp"
#include "restamp/util.hpp"

namespace restamp {

// Queryable model of an OpenAPI document (2.0 and 3.x are normalized into
// the same shape). Immutable after load; safe to share across threads.

enum class ParamLocation { Path, Query, Header, Form };

std::string to_string(ParamLocation loc);
std::optional<ParamLocation> param_location_from_string(std::string_view s);

struct ValueKind {
    std::string kind;  // string | integer | number | boolean | array | object | file
    std::string format;
    std::vector<std::string> enum_values;
    std::optional<double> minimum;
    std::optional<double> maximum;
};

struct ParameterEntry {
    std::string name;
    ParamLocation location = ParamLocation::Query;
    bool required = false;
    ValueKind value_kind;
};

struct ResponseEntry {
    int status = 0;
    std::string description;
    std::vector<std::string> content_types;  // may be empty (bodyless response)
};

struct OperationEntry {
    std::string method;  // upper-case
    std::string operation_id;
    std::vector<ParameterEntry> parameters;
    std::vector<std::string> request_types;       // nonempty only for body-bearing methods
    std::vector<ResponseEntry> responses;         // document order, statuses unique
    const ResponseEntry* find_response(int status) const;
};

struct PathEntry {
    std::string path_template;                                     // begins with '/'
    std::vector<std::pair<std::string, OperationEntry>> operations;  // method -> entry, document order
    const OperationEntry* find_operation(std::string_view method) const;
};

struct SchemaProperty {
    std::string name;
    ValueKind kind;
    bool required = false;
};

struct SchemaDigest {
    std::string name;
    std::vector<SchemaProperty> properties;
    std::map<std::string, Json> example_values;
};

struct SpecIndex {
    std::vector<PathEntry> paths;          // document order
    std::vector<SchemaDigest> definitions; // document order
    std::string source_version;            // "2.0" or the 3.x version tag

    const PathEntry* find_path(std::string_view path_template) const;
    const OperationEntry* find_operation(std::string_view path_template, std::string_view method) const;
    const SchemaDigest* find_definition(std::string_view name) const;
};

class SpecError : public Error {
public:
    enum class Kind { Parse, Reference, Dialect };
    SpecError(Kind kind, const std::string& what) : Error(what), kind(kind) {}
    Kind kind;
};

enum class SpecFormat { Json, Yaml };

SpecIndex load_spec(const std::string& document, SpecFormat format);
// Format chosen by extension: .yaml/.yml -> Yaml, anything else -> Json.
SpecIndex load_spec_file(const std::filesystem::path& path);

std::vector<std::string> list_paths(const SpecIndex& index);

// Tool-facing digests. Lookup misses are reported in `text`, not thrown,
// because the output goes back to an agent as a tool message.
struct EndpointDigest {
    std::string path;
    bool found = false;
    std::string text;
    Json structured;
};

struct DefinitionRendering {
    std::string name;
    bool found = false;
    std::string text;
    Json structured;
};

inline constexpr std::size_t kDefaultDigestBudget = 4000;

EndpointDigest describe_endpoint(const SpecIndex& index, const std::string& path,
                                 std::size_t char_budget = kDefaultDigestBudget);
DefinitionRendering describe_definition(const SpecIndex& index, const std::string& name,
                                        std::size_t char_budget = kDefaultDigestBudget);

}  // namespace restamp
