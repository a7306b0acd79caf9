// Serial/OpenMP loop driver shared by the grid, sweep and trajectory kernels.
#pragma once

#include <cstddef>
#include <exception>
#include <string>
#include <vector>

namespace ccsn {

/// serial is the reference path; parallel must give identical results.
enum class Exec { serial, parallel };

struct CellError {
  std::size_t index;
  std::string message;
};

/// Runs body(i) for i < n and collects per-index exceptions instead of aborting.
template <class F>
std::vector<CellError> for_each_index(std::size_t n, Exec exec, F&& body) {
  std::vector<std::string> msg(n);
  std::vector<char> failed(n, 0);
  auto run = [&](std::size_t i) {
    try {
      body(i);
    } catch (const std::exception& e) {
      failed[i] = 1;
      msg[i] = e.what();
    }
  };
  if (exec == Exec::parallel) {
    const long long m = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < m; ++i) run(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) run(i);
  }
  std::vector<CellError> errs;
  for (std::size_t i = 0; i < n; ++i)
    if (failed[i]) errs.push_back({i, msg[i]});
  return errs;
}

}  // namespace ccsn
