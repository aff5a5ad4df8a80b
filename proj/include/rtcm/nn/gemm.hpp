#pragma once

#include <cstddef>

namespace rtcm::nn {

// C[m x n] (+)= A[m x k] * B[k x n], all row-major and contiguous.
//
// Every output row is produced by the same sequence of multiply-adds in the
// same k order, independent of its position in A. Row permutations of A
// therefore permute C bit-for-bit, which the point-wise layers rely on.
template <typename T>
void gemm(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c, bool accumulate);

// dst[cols x rows] = transpose(src[rows x cols])
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* src, T* dst);

}  // namespace rtcm::nn
