#pragma once

#include <stdexcept>
#include <string>

namespace mrec {

// Error categories double as the C API status codes and CLI exit codes.
enum class ErrorKind : int {
  generic = 1,
  config = 2,
  integrity = 3,
  gateway = 4,
  extraction = 5,
  fingerprint = 6,
  io = 7,
  argument = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
struct IntegrityError : Error {
  explicit IntegrityError(const std::string& w) : Error(ErrorKind::integrity, w) {}
};
struct GatewayError : Error {
  GatewayError(const std::string& w, int status = 0) : Error(ErrorKind::gateway, w), status(status) {}
  int status;
};
struct ExtractionError : Error {
  explicit ExtractionError(const std::string& w) : Error(ErrorKind::extraction, w) {}
};
struct FingerprintError : Error {
  explicit FingerprintError(const std::string& w) : Error(ErrorKind::fingerprint, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};
struct ArgumentError : Error {
  explicit ArgumentError(const std::string& w) : Error(ErrorKind::argument, w) {}
};

// corpus
struct EmptyCorpusError : IntegrityError {
  using IntegrityError::IntegrityError;
};
struct NoPositiveError : IntegrityError {
  using IntegrityError::IntegrityError;
};
struct SamplingError : IntegrityError {
  using IntegrityError::IntegrityError;
};

// schema / prompts
struct SchemaViolation : ExtractionError {
  using ExtractionError::ExtractionError;
};
struct TemplateError : ConfigError {
  using ConfigError::ConfigError;
};

// mote / mar
struct DegenerateItemError : ExtractionError {
  using ExtractionError::ExtractionError;
};
struct ProtocolError : IntegrityError {
  using IntegrityError::IntegrityError;
};
struct ParseError : ExtractionError {
  using ExtractionError::ExtractionError;
};
struct RecommendationError : ExtractionError {
  using ExtractionError::ExtractionError;
};

// eval / reporting
struct ReportingError : ConfigError {
  using ConfigError::ConfigError;
};

}  // namespace mrec
