#include "sdfforge/parallel.hpp"

#include <cstdlib>
#include <string>

#include "sdfforge/error.hpp"

namespace sdfforge {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SDFFORGE_THREADS"); env && *env) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("SDFFORGE_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

}  // namespace sdfforge
