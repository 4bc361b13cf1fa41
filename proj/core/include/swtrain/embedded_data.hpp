#pragma once

#include <map>
#include <string>
#include <string_view>

namespace swtrain::data {

// Contents of core/data compiled into the library, keyed by relative path
// (e.g. "taxonomy.json", "templates/gate.txt").
const std::map<std::string, std::string_view>& embedded_files();

}  // namespace swtrain::data
