#include "bohm/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace bohm {

namespace {

int threads_from_env() {
  if (const char* env = std::getenv("BOHM_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (...) {
    }
  }
  return 1;
}

std::atomic<int>& threads() {
  static std::atomic<int> value{threads_from_env()};
  return value;
}

}  // namespace

int thread_count() { return threads().load(); }

void set_thread_count(int t) { threads().store(std::max(1, t)); }

}  // namespace bohm
