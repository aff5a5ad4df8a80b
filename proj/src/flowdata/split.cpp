#include "rtcm/flowdata/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rtcm/errors.hpp"
#include "rtcm/util/hash.hpp"
#include "rtcm/util/random.hpp"

namespace rtcm::flowdata {

std::uint64_t DatasetSplit::test_fingerprint() const {
    auto sorted = test;
    std::sort(sorted.begin(), sorted.end());
    util::Fnv1a h;
    for (const auto& s : sorted) h.update_u64(s.pair).update_u64(s.low_index);
    return h.digest();
}

DatasetSplit split_dataset(const std::vector<SampleIndex>& records, std::array<double, 3> ratios, std::uint64_t seed) {
    if (records.size() < 3) throw ConfigError("split_dataset needs at least 3 records, got " + std::to_string(records.size()));
    for (double r : ratios)
        if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
    const double total_ratio = ratios[0] + ratios[1] + ratios[2];
    if (!(total_ratio > 0.0)) throw ConfigError("split ratios must not all be zero");

    const auto n = static_cast<double>(records.size());
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = n * ratios[i] / total_ratio;
        sizes[i] = static_cast<std::size_t>(std::floor(exact));
        remainders[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (std::size_t i = 0; assigned < records.size(); ++i, ++assigned) sizes[order[i % 3]] += 1;

    std::vector<std::size_t> perm(records.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    util::Rng rng(util::mix_seed(seed, 0x5b117ULL));
    rng.shuffle(perm);

    DatasetSplit split;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < sizes[0]; ++i) split.train.push_back(records[perm[pos++]]);
    for (std::size_t i = 0; i < sizes[1]; ++i) split.val.push_back(records[perm[pos++]]);
    for (std::size_t i = 0; i < sizes[2]; ++i) split.test.push_back(records[perm[pos++]]);
    return split;
}

}  // namespace rtcm::flowdata
