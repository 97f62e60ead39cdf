#pragma once

#include <stdexcept>
#include <string>

namespace featfool {

// Base of every error the library throws. The CLI maps all of these to exit
// code 1; usage errors are handled separately by the argument parser.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Operand extents disagree with what an operation requires.
class ShapeError : public Error {
   public:
    using Error::Error;
};

// A value lies outside the domain of an operation (class id, token id, k...).
class DomainError : public Error {
   public:
    using Error::Error;
};

// Caller broke a documented precondition on engine usage.
class ContractError : public Error {
   public:
    using Error::Error;
};

// Unknown layer tap, loss kind, missing model, inconsistent settings.
class ConfigError : public Error {
   public:
    using Error::Error;
};

// Binary container is malformed (bad magic, version, truncation).
class FormatError : public Error {
   public:
    using Error::Error;
};

// Text record could not be parsed.
class ParseError : public Error {
   public:
    using Error::Error;
};

class IoError : public Error {
   public:
    using Error::Error;
};

}  // namespace featfool
