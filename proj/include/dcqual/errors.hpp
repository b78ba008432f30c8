#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcqual {

/// Root of every error dcqual raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IllegalArgument : public Error {
 public:
  using Error::Error;
};

/// A response body that could not be turned into an OAI-PMH message.
class ResponseError : public Error {
 public:
  using Error::Error;
};

class MalformedXml : public ResponseError {
 public:
  using ResponseError::ResponseError;
};

class NotOaiPmh : public ResponseError {
 public:
  using ResponseError::ResponseError;
};

class MissingElement : public ResponseError {
 public:
  using ResponseError::ResponseError;
};

/// Transport failure that survived the retry policy.
class NetworkError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersion : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("empty corpus") {}
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class BindError : public Error {
 public:
  using Error::Error;
};

/// Bad line in a rule or config file. `line()` is 1-based.
class FileFormatError : public Error {
 public:
  FileFormatError(std::string source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

}  // namespace dcqual
