#include "blotto/kernels.hpp"

#include <cstddef>

using std::size_t;

#ifdef _OPENMP
#include <omp.h>
#endif

namespace blotto::nn::kern {

namespace {
// flops below this stay serial; fork/join overhead dominates tiny products
constexpr long long kParallelFlops = 1 << 16;

inline long long flops(int m, int k, int n) {
  return static_cast<long long>(m) * k * n;
}
}  // namespace

bool openmp_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    if (!accumulate) {
      for (int j = 0; j < n; ++j) ci[j] = 0.0;
    }
    for (int l = 0; l < k; ++l) {
      double av = ai[l];
      const double* bl = b + static_cast<size_t>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_omp(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    if (!accumulate) {
      for (int j = 0; j < n; ++j) ci[j] = 0.0;
    }
    for (int l = 0; l < k; ++l) {
      double av = ai[l];
      const double* bl = b + static_cast<size_t>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
#else
  matmul_serial(a, b, c, m, k, n, accumulate);
#endif
}

void matmul_nt_serial(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += ai[l] * bj[l];
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

void matmul_nt_omp(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += ai[l] * bj[l];
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
#else
  matmul_nt_serial(a, b, c, m, k, n, accumulate);
#endif
}

void matmul_tn_serial(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  // c[i,j] = sum_l a[l,i] * b[l,j]
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += a[static_cast<size_t>(l) * m + i] * b[static_cast<size_t>(l) * n + j];
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

void matmul_tn_omp(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += a[static_cast<size_t>(l) * m + i] * b[static_cast<size_t>(l) * n + j];
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
#else
  matmul_tn_serial(a, b, c, m, k, n, accumulate);
#endif
}

void matmul(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  if (openmp_available() && flops(m, k, n) >= kParallelFlops && m > 1) {
    matmul_omp(a, b, c, m, k, n, accumulate);
  } else {
    matmul_serial(a, b, c, m, k, n, accumulate);
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  if (openmp_available() && flops(m, k, n) >= kParallelFlops && m > 1) {
    matmul_nt_omp(a, b, c, m, k, n, accumulate);
  } else {
    matmul_nt_serial(a, b, c, m, k, n, accumulate);
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  if (openmp_available() && flops(m, k, n) >= kParallelFlops && m > 1) {
    matmul_tn_omp(a, b, c, m, k, n, accumulate);
  } else {
    matmul_tn_serial(a, b, c, m, k, n, accumulate);
  }
}

}  // namespace blotto::nn::kern
