#pragma once

#include <cstdio>
#include <exception>
#include <string>

#include "depthstitch/error.hpp"

namespace tool {

// Tags errors from pre-pipeline work (file loading, argument checks) with the
// same "[stage]" convention the pipeline uses, so every diagnostic names the
// step that failed.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const depthstitch::StitchError& e) {
    throw depthstitch::StitchError(
        e.kind(), std::string("[") + name + "] " + e.message());
  }
}

// StitchError::what() already carries the error kind and stage tag.
inline int report_failure(const char* prog, const std::exception& e) {
  std::fprintf(stderr, "%s: error: %s\n", prog, e.what());
  return 1;
}

}  // namespace tool
