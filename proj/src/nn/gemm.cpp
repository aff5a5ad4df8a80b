#include "rtcm/nn/gemm.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

namespace rtcm::nn {
namespace {

constexpr std::size_t kRowBlock = 6;
constexpr std::size_t kDepthBlock = 256;

// 6 rows x 256 bytes of accumulators: 24 AVX-512 registers.
template <typename T>
constexpr std::size_t kColBlock = 256 / sizeof(T);

template <typename T>
void micro_kernel(std::size_t depth, const T* const* a_rows, const T* packed, T (&acc)[kRowBlock][kColBlock<T>]) {
    constexpr std::size_t nr = kColBlock<T>;
    for (std::size_t p = 0; p < depth; ++p) {
        const T* brow = packed + p * nr;
        for (std::size_t r = 0; r < kRowBlock; ++r) {
            const T av = a_rows[r][p];
            for (std::size_t j = 0; j < nr; ++j) acc[r][j] += av * brow[j];
        }
    }
}

}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c, bool accumulate) {
    constexpr std::size_t nr = kColBlock<T>;
    if (m == 0 || n == 0) return;
    if (!accumulate) std::fill(c, c + m * n, T(0));
    if (k == 0) return;

    std::vector<T> packed(kDepthBlock * nr);
    for (std::size_t kb = 0; kb < k; kb += kDepthBlock) {
        const std::size_t kc = std::min(kDepthBlock, k - kb);
        for (std::size_t jb = 0; jb < n; jb += nr) {
            const std::size_t nc = std::min(nr, n - jb);
            for (std::size_t p = 0; p < kc; ++p) {
                const T* src = b + (kb + p) * n + jb;
                T* dst = packed.data() + p * nr;
                std::copy(src, src + nc, dst);
                std::fill(dst + nc, dst + nr, T(0));
            }
            for (std::size_t ib = 0; ib < m; ib += kRowBlock) {
                // Rows past the end alias the last row; their results are discarded.
                const T* a_rows[kRowBlock];
                for (std::size_t r = 0; r < kRowBlock; ++r) a_rows[r] = a + std::min(ib + r, m - 1) * k + kb;

                alignas(64) T acc[kRowBlock][nr];
                for (std::size_t r = 0; r < kRowBlock; ++r) {
                    const std::size_t row = std::min(ib + r, m - 1);
                    const T* crow = c + row * n + jb;
                    for (std::size_t j = 0; j < nr; ++j) acc[r][j] = j < nc ? crow[j] : T(0);
                }
                micro_kernel<T>(kc, a_rows, packed.data(), acc);
                for (std::size_t r = 0; r < kRowBlock && ib + r < m; ++r) {
                    std::copy(acc[r], acc[r] + nc, c + (ib + r) * n + jb);
                }
            }
        }
    }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* src, T* dst) {
    constexpr std::size_t tile = 32;
    for (std::size_t i0 = 0; i0 < rows; i0 += tile) {
        for (std::size_t j0 = 0; j0 < cols; j0 += tile) {
            const std::size_t i1 = std::min(rows, i0 + tile);
            const std::size_t j1 = std::min(cols, j0 + tile);
            for (std::size_t i = i0; i < i1; ++i)
                for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
        }
    }
}

template void gemm<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, bool);
template void gemm<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*, bool);
template void transpose<float>(std::size_t, std::size_t, const float*, float*);
template void transpose<double>(std::size_t, std::size_t, const double*, double*);

}  // namespace rtcm::nn
