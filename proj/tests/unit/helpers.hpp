#pragma once

#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "doctest.h"
#include "structpred/error.hpp"

namespace structpred::testing {

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline std::string fixture(const std::string& name) {
  return std::string(STRUCTPRED_FIXTURES) + "/" + name;
}

// Runs `fn` and returns the code of the structpred::Error it throws.
inline ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

}  // namespace structpred::testing
