// Times green_apply (OpenMP rows) against the serial reference and checks
// that both produce identical bits.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "tsdyn/green.hpp"

#ifdef TSDYN_HAVE_OPENMP
#include <omp.h>
#endif

namespace {

template <class Fn>
double best_of(int reps, Fn fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
#ifdef TSDYN_HAVE_OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("%8s %4s %12s %12s %8s %s\n", "N", "n", "serial_s", "parallel_s", "speedup",
              "identical");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  bool all_identical = true;
  for (std::size_t points : {257u, 1025u, 4097u}) {
    for (std::size_t n : {1u, 4u}) {
      const auto ts = tsdyn::TimeScale::uniform(0.0, 1.0, points);
      auto h = tsdyn::GridFunction::zeros(ts, n, 0, ts.equation_count() - 1);
      for (double& v : h.values()) v = unit(rng);
      auto serial = tsdyn::green_apply_serial(ts, h);
      auto parallel = tsdyn::green_apply(ts, h);
      const double ts_serial = best_of(reps, [&] { serial = tsdyn::green_apply_serial(ts, h); });
      const double ts_par = best_of(reps, [&] { parallel = tsdyn::green_apply(ts, h); });
      bool identical = true;
      for (std::size_t i = 0; i < serial.values().size(); ++i) {
        identical = identical && serial.values()[i] == parallel.values()[i];
      }
      all_identical = all_identical && identical;
      std::printf("%8zu %4zu %12.6f %12.6f %8.2f %s\n", points, n, ts_serial, ts_par,
                  ts_serial / ts_par, identical ? "yes" : "NO");
    }
  }
  return all_identical ? 0 : 1;
}
