#pragma once

#include <stdexcept>
#include <string>

namespace deckard {

// Error categories map one-to-one onto deckard_status codes in deckard.h.
enum class ErrorCode {
  InvalidArgument = 1,
  Parse = 2,
  Validation = 3,
  UnknownItem = 4,
  Io = 5,
  Transport = 6,
  State = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(ErrorCode::Parse, what + " (line " + std::to_string(line) + ", column " +
                                    std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& item, const std::string& what)
      : Error(ErrorCode::Validation, item + ": " + what), item_(item) {}
  const std::string& item() const noexcept { return item_; }

 private:
  std::string item_;
};

class UnknownItemError : public Error {
 public:
  explicit UnknownItemError(const std::string& item)
      : Error(ErrorCode::UnknownItem, "unknown item '" + item + "'"), item_(item) {}
  const std::string& item() const noexcept { return item_; }

 private:
  std::string item_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(ErrorCode::Io, path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error(ErrorCode::Transport, what) {}
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error(ErrorCode::State, what) {}
};

inline void require_arg(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace deckard
