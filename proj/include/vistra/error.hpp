#pragma once

#include <stdexcept>
#include <string>

namespace vistra {

// Exit codes surfaced by the command-line tool.
enum class ErrorKind : int {
    config = 2,
    adapter = 3,
    format = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Bad arguments, missing files, unwritable paths.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

// External process (host codec, VMAF tool) failed or produced unusable output.
class AdapterError : public Error {
public:
    explicit AdapterError(const std::string& what) : Error(ErrorKind::adapter, what) {}
};

// Malformed raw video, weight file, or bitstream container.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

} // namespace vistra
