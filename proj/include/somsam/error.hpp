#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace somsam {

/// Failure categories. The CLI maps each one to a process exit code.
enum class ErrorKind {
  Contract,   // caller broke a documented precondition
  Shape,      // dimensions or code shapes disagree
  Format,     // malformed file contents
  Io,         // the operating system refused a read or write
  Overflow,   // an integer counter would wrap
  Internal,   // a runtime self-check failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(ErrorKind::Contract, what) {}
};

class ShapeError : public Error {
 public:
  ShapeError(const std::string& what, std::size_t expected, std::size_t actual)
      : Error(ErrorKind::Shape, what + " (expected " + std::to_string(expected) + ", got " +
                                    std::to_string(actual) + ")"),
        expected_(expected),
        actual_(actual) {}
  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

enum class FormatFault { BadMagic, BadVersion, Truncated, NonFinite, Inconsistent, Checksum };

class FormatError : public Error {
 public:
  FormatError(FormatFault fault, std::size_t offset, const std::string& what)
      : Error(ErrorKind::Format, what + " at byte offset " + std::to_string(offset)),
        fault_(fault),
        offset_(offset) {}
  FormatFault fault() const noexcept { return fault_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  FormatFault fault_;
  std::size_t offset_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class OverflowError : public Error {
 public:
  explicit OverflowError(const std::string& what) : Error(ErrorKind::Overflow, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what) : Error(ErrorKind::Internal, what) {}
};

}  // namespace somsam
