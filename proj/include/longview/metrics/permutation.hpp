#pragma once

#include <cstdint>
#include <vector>

#include "longview/common.hpp"

namespace longview::metrics {

// Two-tailed paired sign-flip permutation test on the mean difference.
// Exhaustive over all 2^n sign patterns when that fits inside n_resamples,
// otherwise seeded Monte Carlo with add-one smoothing. Returns p in (0, 1].
double permutation_test(const std::vector<double>& scores_a, const std::vector<double>& scores_b,
                        std::int64_t n_resamples, std::uint64_t seed);

}  // namespace longview::metrics
