#include "semcom/error.hpp"

namespace semcom {

namespace {
std::string join(const std::vector<std::string>& parts) {
  std::string out = "invalid configuration";
  for (const auto& p : parts) out += "\n  " + p;
  return out;
}
}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(join(problems)), problems_(std::move(problems)) {}

}  // namespace semcom
