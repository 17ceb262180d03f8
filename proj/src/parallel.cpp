#include "echoalign/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace echoalign {
namespace {

std::atomic<std::size_t> g_override{0};

std::size_t from_env() {
  const char* raw = std::getenv("ECHOALIGN_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  try {
    return static_cast<std::size_t>(std::stoul(raw));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

std::size_t thread_count() {
  if (const std::size_t o = g_override.load(); o != 0) return o;
  if (const std::size_t e = from_env(); e != 0) return e;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void set_thread_count(std::size_t n) { g_override.store(n); }

}  // namespace echoalign
