#include "idcrn/log.hpp"

#include <atomic>
#include <iostream>
#include <utility>

namespace idcrn {
namespace {
thread_local std::vector<std::string> t_warnings;
std::atomic<bool> g_echo{false};
}  // namespace

void warn(std::string message) {
  if (g_echo.load(std::memory_order_relaxed)) std::cerr << "warning: " << message << '\n';
  t_warnings.push_back(std::move(message));
}

std::vector<std::string> take_warnings() { return std::exchange(t_warnings, {}); }

void set_warning_echo(bool enabled) { g_echo.store(enabled, std::memory_order_relaxed); }

}  // namespace idcrn
