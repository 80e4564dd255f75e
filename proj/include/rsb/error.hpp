#pragma once

#include <stdexcept>
#include <string>

namespace rsb {

enum class ErrorKind {
  Shape,      // dimension / structure mismatch
  Domain,     // argument outside its mathematical domain
  Boundary,   // parameter on the boundary of the feasible set
  Schema,     // malformed input document
  Capacity,   // problem size exceeds configured caps
  Numeric,    // non-finite intermediate
  Precision,  // certified interval too wide
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace rsb
