#pragma once

#include <stdexcept>
#include <string>

namespace flowfill {

// Base of every error thrown by the library. `code()` is a stable
// machine-readable name (e.g. "MalformedBody"), `what()` is for humans.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Input could not be turned into the requested structure. `path` locates the
// offending field ("tracker.slots", "nodes.3.wires").
class ParseError : public Error {
public:
    ParseError(std::string code, std::string path, const std::string& message)
        : Error(std::move(code), path.empty() ? message : path + ": " + message),
          path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace flowfill
