#include "restamp/demo_target.hpp"

#include <httplib.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "restamp/body_query.hpp"
#include "restamp/jsonx.hpp"

namespace restamp {

namespace {

constexpr std::size_t kOversizedBodyBytes = 4096;
constexpr const char* kValidUser = "tom";
constexpr const char* kValidPassword = "tom123";

struct Pet {
    long long id = 0;
    std::string name;
    std::string status;  // available | pending | sold
};

bool wants_xml(const httplib::Request& req) {
    std::string accept = req.get_header_value("Accept");
    return accept.find("application/xml") != std::string::npos || accept.find("text/xml") != std::string::npos;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string pet_to_xml(const Pet& pet) {
    std::ostringstream out;
    out << "<Pet><id>" << pet.id << "</id><name>" << xml_escape(pet.name) << "</name><status>"
        << xml_escape(pet.status) << "</status></Pet>";
    return out.str();
}

Json pet_to_json(const Pet& pet) {
    return Json{{"id", pet.id}, {"name", pet.name}, {"status", pet.status}};
}

void reply_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_message(const httplib::Request& req, httplib::Response& res, int status, const std::string& message,
                   bool xml_allowed) {
    if (xml_allowed && wants_xml(req)) {
        res.status = status;
        res.set_content("<Message>" + xml_escape(message) + "</Message>", "application/xml");
    } else {
        reply_json(res, status, Json{{"message", message}});
    }
}

}  // namespace

std::set<std::string> load_fault_config(const std::filesystem::path& path) {
    Json doc = Json::parse(read_file(path));
    std::set<std::string> enabled;
    if (doc.contains("faults")) {
        for (const auto& [name, on] : doc.at("faults").items()) {
            if (on.is_boolean() && on.get<bool>()) enabled.insert(name);
        }
    }
    return enabled;
}

std::vector<std::string> known_fault_ids() {
    return {faults::kLogin200, faults::kUndocumented500};
}

struct DemoTarget::Impl {
    DemoTargetOptions options;
    httplib::Server server;
    std::thread worker;
    int bound_port = 0;

    std::mutex store_mutex;
    std::map<long long, Pet> pets;
    long long next_id = 1;

    bool fault(const char* id) const { return options.enabled_faults.count(id) > 0; }

    void route();

    void handle_list_pets(const httplib::Request& req, httplib::Response& res) {
        std::string filter = req.get_param_value("status");
        std::lock_guard<std::mutex> lock(store_mutex);
        if (wants_xml(req)) {
            std::ostringstream out;
            out << "<Pets>";
            for (const auto& [id, pet] : pets) {
                if (!filter.empty() && pet.status != filter) continue;
                out << pet_to_xml(pet);
            }
            out << "</Pets>";
            res.status = 200;
            res.set_content(out.str(), "application/xml");
            return;
        }
        Json arr = Json::array();
        for (const auto& [id, pet] : pets) {
            if (!filter.empty() && pet.status != filter) continue;
            arr.push_back(pet_to_json(pet));
        }
        reply_json(res, 200, Json{{"pets", arr}});
    }

    void handle_create_pet(const httplib::Request& req, httplib::Response& res) {
        if (fault(faults::kUndocumented500) && req.body.size() > kOversizedBodyBytes) {
            reply_json(res, 500, Json{{"error", "internal server error"}});
            return;
        }
        Pet pet;
        std::string content_type = normalize_content_type(req.get_header_value("Content-Type"));
        if (req.is_multipart_form_data()) {
            if (req.has_file("name")) pet.name = req.get_file_value("name").content;
            if (req.has_file("status")) pet.status = req.get_file_value("status").content;
            // an uploaded photo is accepted and discarded; only its presence matters
        } else if (content_type == "application/xml" || content_type == "text/xml") {
            auto root = parse_xml(req.body);
            if (root) {
                if (const auto* name = root->first_child("name")) pet.name = name->text;
                if (const auto* status = root->first_child("status")) pet.status = status->text;
            }
        } else {
            try {
                Json body = Json::parse(req.body);
                if (body.contains("name") && body.at("name").is_string()) pet.name = body.at("name").get<std::string>();
                if (body.contains("status") && body.at("status").is_string())
                    pet.status = body.at("status").get<std::string>();
            } catch (const nlohmann::json::parse_error&) {
                // fall through: empty name answers 400
            }
        }
        if (pet.name.empty()) {
            reply_json(res, 400, Json{{"error", "Invalid pet supplied"}});
            return;
        }
        if (pet.status.empty()) pet.status = "available";
        std::lock_guard<std::mutex> lock(store_mutex);
        pet.id = next_id++;
        pets[pet.id] = pet;
        reply_json(res, 200, pet_to_json(pet));
    }

    std::optional<long long> parse_id(const std::string& raw) {
        if (raw.empty()) return std::nullopt;
        char* end = nullptr;
        errno = 0;
        long long id = std::strtoll(raw.c_str(), &end, 10);
        if (end == nullptr || *end != '\0' || errno != 0) return std::nullopt;
        return id;
    }

    void handle_get_pet(const httplib::Request& req, httplib::Response& res) {
        auto id = parse_id(req.path_params.at("id"));
        if (!id) {
            reply_json(res, 400, Json{{"error", "Invalid ID supplied"}});
            return;
        }
        std::lock_guard<std::mutex> lock(store_mutex);
        auto it = pets.find(*id);
        if (it == pets.end()) {
            if (wants_xml(req)) {
                res.status = 404;
                res.set_content("<Error>Pet not found</Error>", "application/xml");
            } else {
                reply_json(res, 404, Json{{"error", "Pet not found"}});
            }
            return;
        }
        if (wants_xml(req)) {
            res.status = 200;
            res.set_content(pet_to_xml(it->second), "application/xml");
        } else {
            reply_json(res, 200, pet_to_json(it->second));
        }
    }

    void handle_delete_pet(const httplib::Request& req, httplib::Response& res) {
        auto id = parse_id(req.path_params.at("id"));
        if (!id) {
            reply_json(res, 400, Json{{"error", "Invalid ID supplied"}});
            return;
        }
        std::lock_guard<std::mutex> lock(store_mutex);
        auto it = pets.find(*id);
        if (it == pets.end()) {
            reply_json(res, 404, Json{{"error", "Pet not found"}});
            return;
        }
        pets.erase(it);
        reply_json(res, 200, Json{{"message", "pet " + std::to_string(*id) + " deleted"}});
    }

    void handle_login(const httplib::Request& req, httplib::Response& res) {
        std::string username = req.get_param_value("username");
        std::string password = req.get_param_value("password");
        bool valid = username == kValidUser && password == kValidPassword;
        if (valid) {
            reply_message(req, res, 200, "logged in user session: 12345", /*xml_allowed=*/true);
            return;
        }
        if (fault(faults::kLogin200)) {
            // the seeded deviation: invalid credentials still report success
            reply_message(req, res, 200, "logged in user session: 12345", /*xml_allowed=*/true);
            return;
        }
        reply_message(req, res, 400, "Invalid username/password supplied", /*xml_allowed=*/true);
    }
};

void DemoTarget::Impl::route() {
    server.Get("/pets", [this](const httplib::Request& req, httplib::Response& res) { handle_list_pets(req, res); });
    server.Post("/pets", [this](const httplib::Request& req, httplib::Response& res) { handle_create_pet(req, res); });
    server.Get("/pets/:id", [this](const httplib::Request& req, httplib::Response& res) { handle_get_pet(req, res); });
    server.Delete("/pets/:id",
                  [this](const httplib::Request& req, httplib::Response& res) { handle_delete_pet(req, res); });
    server.Get("/user/login", [this](const httplib::Request& req, httplib::Response& res) { handle_login(req, res); });
}

DemoTarget::DemoTarget(DemoTargetOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->options = std::move(options);
}

DemoTarget::~DemoTarget() {
    stop();
}

void DemoTarget::start() {
    auto known = known_fault_ids();
    for (const auto& id : impl_->options.enabled_faults) {
        if (std::find(known.begin(), known.end(), id) == known.end()) {
            throw Error("unknown fault id: " + id);
        }
    }
    impl_->route();
    if (impl_->options.port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(impl_->options.host);
        if (impl_->bound_port <= 0) {
            throw Error("demo target could not bind an ephemeral port on " + impl_->options.host);
        }
    } else {
        if (!impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
            throw Error("demo target port in use: " + std::to_string(impl_->options.port));
        }
        impl_->bound_port = impl_->options.port;
    }
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void DemoTarget::stop() {
    if (impl_->worker.joinable()) {
        impl_->server.stop();
        impl_->worker.join();
    }
}

int DemoTarget::port() const {
    return impl_->bound_port;
}

std::string DemoTarget::base_url() const {
    return "http://" + impl_->options.host + ":" + std::to_string(impl_->bound_port);
}

}  // namespace restamp
