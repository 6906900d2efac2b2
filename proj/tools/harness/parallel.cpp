#include "parallel.hpp"

#include <cstdlib>
#include <string>

#include "fracns/errors.hpp"

namespace fracns::harness {

std::size_t worker_count() {
  if (const char* env = std::getenv("FRACNS_WORKERS"); env && *env) {
    std::size_t pos = 0;
    long value = 0;
    try {
      value = std::stol(env, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != std::string(env).size() || value < 1)
      throw ConfigError(std::string("FRACNS_WORKERS must be a positive integer, got '") + env + "'");
    return static_cast<std::size_t>(value);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace fracns::harness
