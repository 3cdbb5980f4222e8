#pragma once

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "restamp/util.hpp"

namespace restamp {

// In-process system under test implementing the bundled minipet contract.
// With no faults enabled every response's (status, content type) pair is
// documented for its operation; each fault produces exactly its deviation.

namespace faults {
// Invalid login credentials answer 200 instead of the documented 400.
inline constexpr const char* kLogin200 = "login-200";
// Oversized POST /pets bodies answer an undocumented 500.
inline constexpr const char* kUndocumented500 = "undocumented-500";
}  // namespace faults

struct DemoTargetOptions {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 = ephemeral
    std::set<std::string> enabled_faults;
};

// Reads {"faults": {"login-200": true, ...}} and returns the enabled set.
std::set<std::string> load_fault_config(const std::filesystem::path& path);

std::vector<std::string> known_fault_ids();

class DemoTarget {
public:
    explicit DemoTarget(DemoTargetOptions options = {});
    ~DemoTarget();

    DemoTarget(const DemoTarget&) = delete;
    DemoTarget& operator=(const DemoTarget&) = delete;

    void start();  // throws Error when the port is unavailable or a fault id is unknown
    void stop();

    int port() const;
    std::string base_url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace restamp
