#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lt {

/// Base of every error raised by the library. Callers that only need a
/// message can catch this; the subclasses exist so tests and the CLI can
/// distinguish failure kinds.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// persistence
class MissingFile : public Error {
 public:
  explicit MissingFile(const std::string& path)
      : Error("missing file: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line, const std::string& detail)
      : Error("malformed record at line " + std::to_string(line) + ": " + detail),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id) : Error("duplicate id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

class InvalidValue : public Error {
 public:
  using Error::Error;
};

// provider
class ProviderError : public Error {
 public:
  using Error::Error;
};

class Timeout : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class HttpError : public ProviderError {
 public:
  HttpError(int status, const std::string& body)
      : ProviderError("http status " + std::to_string(status) + ": " + body), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class ProviderExhausted : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class EmptyInput : public ProviderError {
 public:
  EmptyInput() : ProviderError("empty input text") {}
};

class MalformedScript : public Error {
 public:
  using Error::Error;
};

// retriever
class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t a, std::size_t b)
      : Error("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class ZeroVector : public Error {
 public:
  ZeroVector() : Error("zero vector has no direction") {}
};

// apikb
class MissingRoot : public Error {
 public:
  explicit MissingRoot(const std::string& path) : Error("source root does not exist: " + path) {}
};

class EmptyKnowledgeBase : public Error {
 public:
  EmptyKnowledgeBase() : Error("API knowledge base is empty") {}
};

// agents
class EmptyTranslation : public Error {
 public:
  EmptyTranslation() : Error("model response contains no code") {}
};

class EmptyArchitectureDescription : public Error {
 public:
  EmptyArchitectureDescription() : Error("architecture description is empty") {}
};

// sandbox
class CommandNotFound : public Error {
 public:
  using Error::Error;
};

class WorkdirCreationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace lt
