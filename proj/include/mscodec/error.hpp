#pragma once

#include <stdexcept>
#include <string>

namespace mscodec {

enum class Errc {
  invalid_argument,
  shape_mismatch,
  divisibility,
  out_of_range,
  sample_rate_mismatch,
  empty_input,
  insufficient_data,
  bad_magic,
  bad_version,
  truncated,
  corrupt,
  config_mismatch,
  io,
};

const char* errc_name(Errc code);

// All library failures surface as this exception; `code()` lets callers
// (and the CLI exit-code mapping) branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mscodec
