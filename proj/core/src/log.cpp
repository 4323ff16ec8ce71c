#include "spanie/log.hpp"

#include <iostream>
#include <mutex>

namespace spanie {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s;
  return s;
}

}  // namespace

WarningSink set_warning_sink(WarningSink next) {
  std::lock_guard lock(sink_mutex());
  auto prev = std::move(sink());
  sink() = std::move(next);
  return prev;
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) {
    sink()(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

}  // namespace spanie
