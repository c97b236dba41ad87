#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pedcot {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated precondition or malformed in-memory input.
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

// Template bundle validation failure; carries the offending slot or entry name.
class TemplateError : public Error {
public:
    TemplateError(const std::string& slot, const std::string& msg)
        : Error("template error [" + slot + "]: " + msg), slot_(slot) {}
    const std::string& slot() const { return slot_; }

private:
    std::string slot_;
};

// Stage-1 response lacks the split delimiter for principle k.
class MissingDelimiter : public Error {
public:
    explicit MissingDelimiter(int principle)
        : Error("stage-1 response is missing the \"\\n\\n" + std::to_string(principle) +
                ".\" delimiter for principle " + std::to_string(principle)),
          principle_(principle) {}
    int principle() const { return principle_; }

private:
    int principle_;
};

// Stage-1 segment for principle k is empty after trimming.
class EmptySegment : public Error {
public:
    explicit EmptySegment(int principle)
        : Error("stage-1 segment for principle " + std::to_string(principle) +
                " is empty after trimming"),
          principle_(principle) {}
    int principle() const { return principle_; }

private:
    int principle_;
};

// No recognizable verdict for one or more principles (or no yes/no token).
class ParseFailure : public Error {
public:
    explicit ParseFailure(const std::string& msg) : Error("parse failure: " + msg) {}
    ParseFailure(const std::string& msg, std::vector<int> principles)
        : Error("parse failure: " + msg), principles_(std::move(principles)) {}
    const std::vector<int>& principles() const { return principles_; }

private:
    std::vector<int> principles_;
};

// Transport or HTTP-level failure that survived all retries.
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& msg) : Error("provider error: " + msg) {}
};

// Replay backend asked for a key that is not in the cache.
class ReplayMiss : public Error {
public:
    explicit ReplayMiss(const std::string& key)
        : Error("replay cache miss for key " + key), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

// Mock backend asked for a fixture that was not scripted.
class FixtureMiss : public Error {
public:
    explicit FixtureMiss(const std::string& key)
        : Error("mock fixture miss for key " + key), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

// Malformed dataset record; line is 1-based, 0 when not line-addressable.
class LoadError : public Error {
public:
    LoadError(int line, const std::string& msg)
        : Error("load error at line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Bad CLI/config-file input; reported before any request is sent.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

} // namespace pedcot
