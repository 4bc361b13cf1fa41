#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace swtrain::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Lowercase, trim, fold '-' and '_' to spaces and collapse runs of whitespace.
std::string normalize_label(std::string_view s);

// Lowercase and split on anything that is not an ASCII letter or digit.
// Bytes >= 0x80 are kept inside tokens so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// "- item" lines; "(none)" when empty.
std::string bullet_list(const std::vector<std::string>& items);

// Replaces every {{name}} with vars.at(name). Unknown placeholders are left untouched.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

std::string sha256_hex(std::string_view data);

// Removes a surrounding ``` fence (with optional language tag) if present.
std::string strip_code_fence(std::string_view s);

}  // namespace swtrain::text
