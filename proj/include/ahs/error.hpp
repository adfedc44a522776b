#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ahs {

enum class ErrorKind {
  InvalidInput,
  DegenerateNeighborhood,
  InvalidFrame,
  DegenerateDihedral,
  DegenerateTrihedral,
  Divergence,
  Parse,
  EmptyMesh,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DegenerateNeighborhood: return "DegenerateNeighborhood";
    case ErrorKind::InvalidFrame: return "InvalidFrame";
    case ErrorKind::DegenerateDihedral: return "DegenerateDihedral";
    case ErrorKind::DegenerateTrihedral: return "DegenerateTrihedral";
    case ErrorKind::Divergence: return "DivergenceError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::EmptyMesh: return "EmptyMesh";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

}  // namespace ahs
