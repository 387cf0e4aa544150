// Times the serial matmul reference against the OpenMP variant and verifies
// the results match bit for bit (the parallel split never changes summation
// order, so the expected max difference is exactly zero).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "blotto/kernels.hpp"
#include "blotto/rng.hpp"

using namespace blotto;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

using KernFn = void (*)(const double*, const double*, double*, int, int, int, bool);

double time_best_of(KernFn fn, const double* a, const double* b, double* c, int m, int k, int n,
                    int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    double t0 = now_s();
    fn(a, b, c, m, k, n, false);
    double dt = now_s() - t0;
    if (dt < best) best = dt;
  }
  return best;
}

struct Variant {
  const char* name;
  KernFn serial;
  KernFn omp;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> sizes = {64, 128, 256, 512};
  if (argc > 1) {
    sizes.clear();
    for (int i = 1; i < argc; ++i) {
      int s = std::atoi(argv[i]);
      if (s <= 0) {
        std::fprintf(stderr, "usage: %s [size...]  (positive square sizes; default 64 128 256 512)\n",
                     argv[0]);
        return 2;
      }
      sizes.push_back(s);
    }
  }

  std::printf("openmp: %s, max threads %d\n", nn::kern::openmp_available() ? "yes" : "no",
              nn::kern::max_threads());
  std::printf("%-10s %6s %12s %12s %9s %10s\n", "kernel", "size", "serial_ms", "omp_ms",
              "speedup", "max_diff");

  Variant variants[] = {
      {"matmul", nn::kern::matmul_serial, nn::kern::matmul_omp},
      {"matmul_nt", nn::kern::matmul_nt_serial, nn::kern::matmul_nt_omp},
      {"matmul_tn", nn::kern::matmul_tn_serial, nn::kern::matmul_tn_omp},
  };

  bool all_identical = true;
  for (int s : sizes) {
    int m = s, k = s, n = s;
    Rng rng(0x9E3779B97F4A7C15ull ^ static_cast<uint64_t>(s));
    std::vector<double> a(static_cast<size_t>(m) * k), b(static_cast<size_t>(k) * n);
    for (double& x : a) x = rng.normal();
    for (double& x : b) x = rng.normal();
    std::vector<double> c1(static_cast<size_t>(m) * n), c2(c1.size());

    for (const Variant& v : variants) {
      int reps = s >= 512 ? 3 : 5;
      double ts = time_best_of(v.serial, a.data(), b.data(), c1.data(), m, k, n, reps);
      double tp = time_best_of(v.omp, a.data(), b.data(), c2.data(), m, k, n, reps);
      double max_diff = 0.0;
      for (size_t i = 0; i < c1.size(); ++i) {
        double d = c1[i] - c2[i];
        if (d < 0) d = -d;
        if (d > max_diff) max_diff = d;
      }
      bool identical = std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0;
      all_identical = all_identical && identical;
      std::printf("%-10s %6d %12.3f %12.3f %8.2fx %10.3g\n", v.name, s, ts * 1e3, tp * 1e3,
                  ts / tp, max_diff);
    }
  }

  if (!all_identical) {
    std::printf("FAIL: parallel kernels diverged from the serial reference\n");
    return 1;
  }
  std::printf("parallel kernels bit-identical to serial reference\n");
  return 0;
}
