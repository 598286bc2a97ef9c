#include "bohm/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <exception>
#include <string>

#include "bohm/dynamics.hpp"

namespace bohm {

int worker_count() {
  if (const char* env = std::getenv("BOHM_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

std::vector<TrajectoryRecord> integrate_ensemble(const Wavefunction& wf, std::span<const Point2> initial_points,
                                                 const IntegratorSettings& settings) {
  settings.validate();
  std::vector<TrajectoryRecord> out(initial_points.size());
  const auto n = static_cast<long>(initial_points.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = integrate_isolated(wf, initial_points[i], settings);
    } catch (...) {
#pragma omp critical(bohm_ensemble_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace bohm
