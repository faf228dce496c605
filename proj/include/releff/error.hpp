#pragma once

#include <stdexcept>
#include <string>

namespace releff {

// Exit-code families used by the CLI: 2 config, 3 data, 4 numerical.
enum class ErrorFamily { config = 2, data = 3, numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorFamily family, std::string kind, std::string module, const std::string& what)
      : std::runtime_error(module + "::" + kind + ": " + what),
        family_(family),
        kind_(std::move(kind)),
        module_(std::move(module)) {}

  ErrorFamily family() const { return family_; }
  const std::string& kind() const { return kind_; }
  const std::string& module() const { return module_; }

 private:
  ErrorFamily family_;
  std::string kind_;
  std::string module_;
};

inline Error config_error(std::string kind, std::string module, const std::string& what) {
  return Error(ErrorFamily::config, std::move(kind), std::move(module), what);
}
inline Error data_error(std::string kind, std::string module, const std::string& what) {
  return Error(ErrorFamily::data, std::move(kind), std::move(module), what);
}
inline Error numerical_error(std::string kind, std::string module, const std::string& what) {
  return Error(ErrorFamily::numerical, std::move(kind), std::move(module), what);
}

}  // namespace releff
