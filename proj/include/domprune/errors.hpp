#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace domprune {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Empty or whitespace-only HTML input.
class EmptyInput : public Error {
public:
    EmptyInput() : Error("input document is empty") {}
};

/// A keyword weight is out of range, a key collides ambiguously, or the
/// weights payload is otherwise unusable. Names the offending key.
class InvalidWeights : public Error {
public:
    explicit InvalidWeights(const std::string& detail, std::string key = "")
        : Error("invalid keyword weights: " + detail), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Grounder reply could not be parsed into a decision.
class MalformedDecision : public Error {
public:
    MalformedDecision(const std::string& reason, std::size_t byte_offset)
        : Error("malformed grounder decision at byte " + std::to_string(byte_offset) + ": " + reason),
          byte_offset_(byte_offset) {}
    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_ = 0;
};

/// A decision names an element id that is not in the candidate list.
class UnknownElement : public Error {
public:
    explicit UnknownElement(long long id)
        : Error("element id " + std::to_string(id) + " is not in the candidate list"), id_(id) {}
    long long id() const { return id_; }

private:
    long long id_;
};

/// An action violates the action-space constraints (missing text, bad
/// scroll direction, ...).
class InvalidAction : public Error {
public:
    explicit InvalidAction(const std::string& detail) : Error("invalid action: " + detail) {}
};

/// <tag> not found in a response body.
class TagMissing : public Error {
public:
    explicit TagMissing(const std::string& tag) : Error("tag <" + tag + "> not found") {}
};

/// <tag> found but never closed.
class TagUnclosed : public Error {
public:
    explicit TagUnclosed(const std::string& tag) : Error("tag <" + tag + "> is never closed") {}
};

/// A structured LLM reply is missing required keys or is not valid JSON.
/// Drives the format reward: format_ok == no FormatError.
class FormatError : public Error {
public:
    explicit FormatError(std::vector<std::string> missing_keys)
        : Error(describe(missing_keys)), missing_keys_(std::move(missing_keys)) {}
    const std::vector<std::string>& missing_keys() const { return missing_keys_; }

private:
    static std::string describe(const std::vector<std::string>& keys) {
        std::string s = "response format invalid; offending keys: [";
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (i) s += ", ";
            s += keys[i];
        }
        s += "]";
        return s;
    }
    std::vector<std::string> missing_keys_;
};

/// A prompt template slot has no value to substitute.
class MissingSlot : public Error {
public:
    explicit MissingSlot(const std::string& slot) : Error("missing prompt slot: " + slot), slot_(slot) {}
    const std::string& slot() const { return slot_; }

private:
    std::string slot_;
};

/// Chat endpoint failed after all retries.
class EndpointError : public Error {
public:
    EndpointError(int status, int attempts, const std::string& detail = "")
        : Error("endpoint error (status " + std::to_string(status) + " after " + std::to_string(attempts) +
                " attempts)" + (detail.empty() ? "" : ": " + detail)),
          status_(status),
          attempts_(attempts) {}
    int status() const { return status_; }
    int attempts() const { return attempts_; }

private:
    int status_;
    int attempts_;
};

/// Chat endpoint did not answer within the configured timeout.
class Timeout : public Error {
public:
    Timeout() : Error("endpoint timed out") {}
};

/// Division by zero and friends.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& detail) : Error(detail) {}
};

/// Unreadable files, bad config values.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& detail) : Error("config error: " + detail) {}
};

}  // namespace domprune
