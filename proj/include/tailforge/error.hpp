#pragma once

#include <stdexcept>
#include <string>

namespace tailforge {

// Coarse error classes; the service maps them onto HTTP status codes.
enum class ErrorKind {
  invalid_argument,  // malformed or out-of-range input (400)
  not_found,         // unknown dataset or job id (404)
  conflict,          // duplicate registration (409)
  infeasible,        // method cannot be applied to this data (422)
  degenerate,        // numerically singular configuration (422)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::invalid_argument, what);
}

}  // namespace tailforge
