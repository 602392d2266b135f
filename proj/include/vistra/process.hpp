#pragma once

#include <map>
#include <string>

namespace vistra {

struct ProcessResult {
    int exit_code = 0;
    std::string out;
    std::string err;
};

// Runs `command` through /bin/sh, capturing stdout and stderr.
ProcessResult run_shell(const std::string& command);

// Replaces each "{name}" (lower-case name) with values.at(name). Throws
// ConfigError on an unknown placeholder.
std::string expand_template(const std::string& tmpl, const std::map<std::string, std::string>& values);

// Number of occurrences of "{name}" in tmpl.
int count_placeholder(const std::string& tmpl, const std::string& name);

} // namespace vistra
