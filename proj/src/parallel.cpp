#include "transgen/parallel.hpp"

#include <cstdlib>
#include <string>

namespace transgen {

int default_worker_count() {
  if (const char* env = std::getenv("TRANSGEN_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace transgen
