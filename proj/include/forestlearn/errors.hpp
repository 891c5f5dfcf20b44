#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace forestlearn {

// Malformed tabular input. line() is 1-based; 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A coded container that fails its checksum or ends early.
class CorruptStream : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace forestlearn
