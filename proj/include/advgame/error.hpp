#pragma once

#include <stdexcept>
#include <string>

namespace advgame {

// Machine-readable error class carried by every harness exception. The CLI
// prints it verbatim, so the spellings are part of the external interface.
enum class ErrorClass {
  kInvalidArgument,
  kInvalidConfig,
  kParse,
  kNotFound,
  kTransport,
  kProtocol,
  kNumeric,
  kInternal,
  kNoTranscripts,
};

const char* error_class_name(ErrorClass c);

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const { return cls_; }

 private:
  ErrorClass cls_;
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error(ErrorClass::kTransport, what) {}
};

// Malformed player output. The offending bytes are kept verbatim for the log.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string offending)
      : Error(ErrorClass::kProtocol, what), offending_(std::move(offending)) {}
  const std::string& offending_bytes() const { return offending_; }

 private:
  std::string offending_;
};

}  // namespace advgame
