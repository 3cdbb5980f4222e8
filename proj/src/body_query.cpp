#include "restamp/body_query.hpp"

#include <cctype>
#include <cstdlib>

#include "restamp/jsonx.hpp"
#include "restamp/util.hpp"

namespace restamp {

namespace {

struct Segment {
    std::string name;
    int index = 0;  // [i] suffix, default first occurrence
};

std::vector<Segment> parse_selector(const std::string& selector) {
    std::vector<Segment> segments;
    for (const auto& part : split(selector, '.')) {
        Segment seg;
        std::size_t bracket = part.find('[');
        if (bracket != std::string::npos && part.back() == ']') {
            seg.name = part.substr(0, bracket);
            seg.index = std::atoi(part.substr(bracket + 1, part.size() - bracket - 2).c_str());
        } else {
            seg.name = part;
        }
        segments.push_back(std::move(seg));
    }
    return segments;
}

std::string decode_entities(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (text[pos] == '&') {
            std::size_t semi = text.find(';', pos);
            if (semi != std::string_view::npos && semi - pos <= 5) {
                std::string_view entity = text.substr(pos + 1, semi - pos - 1);
                if (entity == "lt") { out += '<'; pos = semi + 1; continue; }
                if (entity == "gt") { out += '>'; pos = semi + 1; continue; }
                if (entity == "amp") { out += '&'; pos = semi + 1; continue; }
                if (entity == "quot") { out += '"'; pos = semi + 1; continue; }
                if (entity == "apos") { out += '\''; pos = semi + 1; continue; }
            }
        }
        out += text[pos++];
    }
    return out;
}

class XmlParser {
public:
    explicit XmlParser(std::string_view text) : text_(text) {}

    std::unique_ptr<XmlElement> parse() {
        skip_prolog();
        auto root = parse_element();
        if (!root) return nullptr;
        skip_ws();
        return pos_ == text_.size() ? std::move(root) : nullptr;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    void skip_prolog() {
        skip_ws();
        while (pos_ + 1 < text_.size() && text_[pos_] == '<' &&
               (text_[pos_ + 1] == '?' || text_[pos_ + 1] == '!')) {
            std::size_t end = text_.find('>', pos_);
            if (end == std::string_view::npos) { pos_ = text_.size(); return; }
            pos_ = end + 1;
            skip_ws();
        }
    }

    std::unique_ptr<XmlElement> parse_element() {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '<') return nullptr;
        std::size_t name_start = pos_ + 1;
        std::size_t name_end = name_start;
        while (name_end < text_.size() && !std::isspace(static_cast<unsigned char>(text_[name_end])) &&
               text_[name_end] != '>' && text_[name_end] != '/') {
            ++name_end;
        }
        auto element = std::make_unique<XmlElement>();
        element->name = std::string(text_.substr(name_start, name_end - name_start));
        if (element->name.empty()) return nullptr;

        std::size_t tag_end = text_.find('>', name_end);
        if (tag_end == std::string_view::npos) return nullptr;
        bool self_closing = tag_end > 0 && text_[tag_end - 1] == '/';
        pos_ = tag_end + 1;
        if (self_closing) return element;

        std::string close_tag = "</" + element->name;
        while (pos_ < text_.size()) {
            if (text_[pos_] == '<') {
                if (starts_with(text_.substr(pos_), close_tag)) {
                    std::size_t end = text_.find('>', pos_);
                    if (end == std::string_view::npos) return nullptr;
                    pos_ = end + 1;
                    return element;
                }
                auto child = parse_element();
                if (!child) return nullptr;
                element->children.push_back(std::move(child));
            } else {
                std::size_t next = text_.find('<', pos_);
                if (next == std::string_view::npos) return nullptr;
                element->text += decode_entities(trim(text_.substr(pos_, next - pos_)));
                pos_ = next;
            }
        }
        return nullptr;  // unterminated element
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

std::string json_leaf_text(const Json& value) {
    if (value.is_string()) return value.get<std::string>();
    return value.dump();
}

std::optional<std::string> query_json(const std::string& body, const std::vector<Segment>& segments) {
    Json doc;
    try {
        doc = Json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        return std::nullopt;
    }
    const Json* cur = &doc;
    for (const auto& seg : segments) {
        if (!seg.name.empty()) {
            if (!cur->is_object() || !cur->contains(seg.name)) {
                return std::nullopt;
            }
            cur = &cur->at(seg.name);
        }
        if (cur->is_array()) {
            if (seg.index < 0 || static_cast<std::size_t>(seg.index) >= cur->size()) return std::nullopt;
            cur = &cur->at(static_cast<std::size_t>(seg.index));
        } else if (seg.name.empty()) {
            return std::nullopt;  // "[i]" on a non-array
        }
    }
    return json_leaf_text(*cur);
}

std::optional<std::string> query_xml(const std::string& body, const std::vector<Segment>& segments) {
    auto root = parse_xml(body);
    if (!root) return std::nullopt;
    const XmlElement* cur = root.get();
    std::size_t start = 0;
    // The root tag may or may not be spelled in the selector.
    if (!segments.empty() && segments[0].name == cur->name) start = 1;
    for (std::size_t i = start; i < segments.size(); ++i) {
        const Segment& seg = segments[i];
        const XmlElement* next = nullptr;
        int seen = 0;
        for (const auto& child : cur->children) {
            if (child->name == seg.name) {
                if (seen == seg.index) {
                    next = child.get();
                    break;
                }
                ++seen;
            }
        }
        if (next == nullptr) return std::nullopt;
        cur = next;
    }
    return cur->text;
}

}  // namespace

const XmlElement* XmlElement::first_child(std::string_view child_name) const {
    for (const auto& child : children) {
        if (child->name == child_name) return child.get();
    }
    return nullptr;
}

std::unique_ptr<XmlElement> parse_xml(std::string_view text) {
    XmlParser parser(text);
    return parser.parse();
}

std::optional<std::string> query_body(const std::string& body, const std::string& content_type,
                                      const std::string& selector) {
    if (selector.empty()) return std::nullopt;
    auto segments = parse_selector(selector);
    std::string ct = normalize_content_type(content_type);
    if (ct.find("xml") != std::string::npos) {
        return query_xml(body, segments);
    }
    if (ct.find("json") != std::string::npos || ct.empty()) {
        return query_json(body, segments);
    }
    // Unknown content type: try JSON, then XML, then give up.
    if (auto j = query_json(body, segments)) return j;
    return query_xml(body, segments);
}

bool body_field_exists(const std::string& body, const std::string& content_type, const std::string& selector) {
    return query_body(body, content_type, selector).has_value();
}

}  // namespace restamp
