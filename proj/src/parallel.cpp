#include "epitome/parallel.hpp"

#include <cstdlib>
#include <string>

namespace epitome {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EPITOME_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

}  // namespace epitome
