#pragma once

#include <stdexcept>
#include <string>

namespace ctu {

// Root of everything the library throws. Callers that only care about
// "did the pipeline fail" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io error: " + what) {}
};

// Structural problem in an input file (malformed JSON line, bad CSV quoting).
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& reason)
      : Error("format error at line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

// A record parsed fine but violates a domain invariant.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& user_id, const std::string& reason)
      : Error("validation error for user '" + user_id + "': " + reason),
        user_id_(user_id),
        reason_(reason) {}

  const std::string& user_id() const noexcept { return user_id_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string user_id_;
  std::string reason_;
};

class TooFewEvents : public Error {
 public:
  using Error::Error;
};

class TooFewIntervals : public Error {
 public:
  using Error::Error;
};

class UnscoredEvent : public Error {
 public:
  UnscoredEvent(const std::string& user_id, const std::string& event_id)
      : Error("event '" + event_id + "' of user '" + user_id + "' has no toxicity score"),
        user_id_(user_id),
        event_id_(event_id) {}

  const std::string& user_id() const noexcept { return user_id_; }
  const std::string& event_id() const noexcept { return event_id_; }

 private:
  std::string user_id_;
  std::string event_id_;
};

class MissingText : public Error {
 public:
  MissingText(const std::string& user_id, const std::string& event_id)
      : Error("event '" + event_id + "' of user '" + user_id + "' has no text to score"),
        user_id_(user_id),
        event_id_(event_id) {}

  const std::string& user_id() const noexcept { return user_id_; }
  const std::string& event_id() const noexcept { return event_id_; }

 private:
  std::string user_id_;
  std::string event_id_;
};

class RemoteError : public Error {
 public:
  RemoteError(int status, const std::string& body)
      : Error("remote scorer failed with status " + std::to_string(status) + ": " + body),
        status_(status),
        body_(body) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class TooFewUsers : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctu
