#pragma once

#include <nlohmann/json.hpp>

namespace restamp {

// Key order follows the source document everywhere; reports and suites
// serialize byte-stably because of it.
using Json = nlohmann::ordered_json;

}  // namespace restamp
