#pragma once

#include <stdexcept>
#include <string>

namespace transgen {

// Base for every failure the library reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, invalid arguments, unmet preconditions.
// The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

// Text parse failure with a location attached.
class ParseError : public InputError {
 public:
  ParseError(const std::string& where, std::size_t line, const std::string& what)
      : InputError(where + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace transgen
