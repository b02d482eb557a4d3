#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "graspsynth/errors.hpp"
#include "graspsynth/parallel.hpp"

namespace graspsynth {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

std::function<void(std::string_view)>& sink() {
  static std::function<void(std::string_view)> s = [](std::string_view msg) {
    std::clog << "warning: " << msg << '\n';
  };
  return s;
}

std::atomic<int> thread_override{-1};

}  // namespace

void set_warning_sink(std::function<void(std::string_view)> s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

namespace parallel {

int worker_threads() {
  int requested = thread_override.load();
  if (requested < 0) {
    requested = 0;
    if (const char* env = std::getenv("GRASPSYNTH_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && v > 0) requested = static_cast<int>(v);
    }
  }
  if (requested > 0) return requested;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_worker_threads(int n) { thread_override.store(n > 0 ? n : -1); }

}  // namespace parallel
}  // namespace graspsynth
