#pragma once

#include <stdexcept>
#include <string>

namespace georva {

// Error categories. The CLI maps these onto its documented exit codes
// (format -> 2, dimension/data -> 3, everything else -> 1).
enum class Errc {
  invalid_argument,
  format,
  dimension,
  data,
  resource,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, std::string msg) {
  throw Error(code, std::move(msg));
}

}  // namespace georva
