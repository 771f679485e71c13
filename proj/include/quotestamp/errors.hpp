#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quotestamp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input document. `offset` is a byte offset for JSON input and a
// 1-based line number for line-oriented formats.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg), offset(offset) {}
    std::size_t offset = 0;
};

// Structurally valid input that violates a domain invariant.
struct ValidationError : Error {
    using Error::Error;
};

struct ArgumentError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct SamplingError : Error {
    using Error::Error;
};

// Verifier transport failed after all retries.
struct TransportError : Error {
    using Error::Error;
};

// Verifier replied but the payload could not be decoded; `raw` keeps the
// payload for audit.
struct DecodeError : Error {
    DecodeError(const std::string& msg, std::string raw)
        : Error(msg), raw(std::move(raw)) {}
    std::string raw;
};

struct TimeoutError : Error {
    using Error::Error;
};

// A mock was driven past its script or otherwise off its contract.
struct ContractError : Error {
    using Error::Error;
};

}  // namespace quotestamp
