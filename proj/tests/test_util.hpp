#ifndef UCS_TEST_UTIL_HPP
#define UCS_TEST_UTIL_HPP

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

#include "ucs/error.hpp"
#include "ucs/rng.hpp"
#include "ucs/types.hpp"

namespace test {

inline ucs::Matrix random_matrix(ucs::Index rows, ucs::Index cols, std::uint64_t seed) {
  ucs::Rng rng(seed);
  ucs::Matrix m(rows, cols);
  for (ucs::Index i = 0; i < rows; ++i)
    for (ucs::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ucs_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <typename Fn>
ucs::ErrorKind error_kind(Fn&& fn) {
  try {
    fn();
  } catch (const ucs::Error& e) {
    return e.kind();
  }
  FAIL("expected ucs::Error");
  return ucs::ErrorKind::InvalidArgument;
}

template <typename Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const ucs::Error& e) {
    return e.what();
  }
  FAIL("expected ucs::Error");
  return {};
}

}  // namespace test

#endif
