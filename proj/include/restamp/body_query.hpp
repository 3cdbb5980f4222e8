#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace restamp {

// Dotted-path lookups into response bodies. JSON bodies use nlohmann; XML
// bodies go through the minimal element tree below (tags, text, attributes
// ignored) which is all the demo-scale payloads need.

struct XmlElement {
    std::string name;
    std::string text;  // concatenated character data directly under this element
    std::vector<std::unique_ptr<XmlElement>> children;

    const XmlElement* first_child(std::string_view child_name) const;
};

// Returns nullptr on malformed input.
std::unique_ptr<XmlElement> parse_xml(std::string_view text);

// Selector grammar: dotted names, [i] after a name indexes repeated elements
// or array entries ("pets.pet[1].name"). For JSON, the root object is
// addressed directly; for XML the root element's name is skipped when the
// first segment does not match it.
std::optional<std::string> query_body(const std::string& body, const std::string& content_type,
                                      const std::string& selector);

// True when the selector resolves at all (field exists).
bool body_field_exists(const std::string& body, const std::string& content_type, const std::string& selector);

}  // namespace restamp
