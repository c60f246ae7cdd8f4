#pragma once

#include <stdexcept>
#include <string>

namespace sgt {

/// Exception raised by every sgt module. The message is prefixed with the
/// module name so that CLI output reads e.g. "corpus_io: sentence 3 ...".
class Error : public std::runtime_error {
 public:
  enum class Kind {
    kUsage,  // caller misuse: bad arguments, bad shapes, unknown options
    kData,   // malformed or inconsistent input data
  };

  Error(std::string module, const std::string& message, Kind kind = Kind::kData)
      : std::runtime_error(module + ": " + message), module_(std::move(module)), kind_(kind) {}

  const std::string& module() const noexcept { return module_; }
  Kind kind() const noexcept { return kind_; }

 private:
  std::string module_;
  Kind kind_;
};

}  // namespace sgt
