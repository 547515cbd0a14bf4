// Copyright 2026 The SINet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>

namespace sinet::detail {

// Row-major kernels; all accumulate into C.

// C[M x N] += A[M x K] * B[K x N]
inline void gemm_nn(std::size_t M, std::size_t N, std::size_t K,
                    const double* A, const double* B, double* C) {
  for (std::size_t i = 0; i < M; ++i) {
    double* c = C + i * N;
    const double* a = A + i * K;
    for (std::size_t p = 0; p < K; ++p) {
      const double av = a[p];
      const double* b = B + p * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

// C[M x N] += A[M x K] * B[N x K]^T
inline void gemm_nt(std::size_t M, std::size_t N, std::size_t K,
                    const double* A, const double* B, double* C) {
  for (std::size_t i = 0; i < M; ++i) {
    const double* a = A + i * K;
    for (std::size_t j = 0; j < N; ++j) {
      const double* b = B + j * K;
      double acc = 0.0;
      for (std::size_t p = 0; p < K; ++p) acc += a[p] * b[p];
      C[i * N + j] += acc;
    }
  }
}

// C[M x N] += A[K x M]^T * B[K x N]
inline void gemm_tn(std::size_t M, std::size_t N, std::size_t K,
                    const double* A, const double* B, double* C) {
  for (std::size_t p = 0; p < K; ++p) {
    const double* a = A + p * M;
    const double* b = B + p * N;
    for (std::size_t i = 0; i < M; ++i) {
      const double av = a[i];
      double* c = C + i * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

}  // namespace sinet::detail
