#pragma once

#include <fmt/format.h>

#include <cstdio>

namespace oe {

// Diagnostics go to stderr; stdout is reserved for data.
template <typename... Args>
void log_info(fmt::format_string<Args...> format, Args&&... args) {
  fmt::print(stderr, "[oe] {}\n", fmt::format(format, std::forward<Args>(args)...));
}

template <typename... Args>
void log_warn(fmt::format_string<Args...> format, Args&&... args) {
  fmt::print(stderr, "[oe] warning: {}\n", fmt::format(format, std::forward<Args>(args)...));
}

}  // namespace oe
