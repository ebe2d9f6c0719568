#pragma once

#include <stdexcept>
#include <string>

namespace libs {

// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Bad argument, config, or file content supplied by the caller.
class invalid_input : public error {
public:
    explicit invalid_input(const std::string& what) : error(what) {}
};

// Operation called on an object in a state that forbids it.
class invalid_state : public error {
public:
    explicit invalid_state(const std::string& what) : error(what) {}
};

// Malformed file; message carries the location when known.
class parse_error : public invalid_input {
public:
    explicit parse_error(const std::string& what) : invalid_input(what) {}
    parse_error(const std::string& path, long line, const std::string& what)
        : invalid_input(path + ":" + std::to_string(line) + ": " + what) {}
};

}  // namespace libs
