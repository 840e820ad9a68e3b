#pragma once

#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace dlbac::cli {

// `key = value` lines; `#` starts a comment. Keys may use `_` or `-`.
// Throws ParseError.
std::map<std::string, std::string> parse_config(std::string_view text);

// args excludes the program name. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dlbac::cli
