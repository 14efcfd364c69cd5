#pragma once

#include <atomic>
#include <iostream>
#include <string_view>

namespace p3d::log {

inline std::atomic<bool>& quiet() {
  static std::atomic<bool> flag{false};
  return flag;
}

inline void warn(std::string_view msg) {
  if (!quiet()) std::cerr << "[p3d] warning: " << msg << '\n';
}

inline void info(std::string_view msg) {
  if (!quiet()) std::cerr << "[p3d] " << msg << '\n';
}

}  // namespace p3d::log
