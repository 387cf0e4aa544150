#pragma once

namespace blotto::nn::kern {

// Dense row-major matmul family. Each has a serial reference and an OpenMP
// variant parallelized over output rows; every output element is produced by
// exactly one thread with a fixed inner summation order, so the two variants
// are bit-identical and results do not depend on thread count.
//
// accumulate=true adds into C instead of overwriting (used by backward passes).

// C[m,n] = A[m,k] * B[k,n]
void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void matmul_omp(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);

// C[m,n] = A[m,k] * B[n,k]^T
void matmul_nt_serial(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void matmul_nt_omp(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);

// C[m,n] = A[k,m]^T * B[k,n]
void matmul_tn_serial(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void matmul_tn_omp(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);

// Dispatchers: pick the OpenMP path when the problem is big enough to pay for
// the fork/join, otherwise the serial path. Same bits either way.
void matmul(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate = false);

bool openmp_available();
int max_threads();

}  // namespace blotto::nn::kern
