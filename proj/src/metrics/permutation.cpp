#include "longview/metrics/permutation.hpp"

#include <cmath>

namespace longview::metrics {

double permutation_test(const std::vector<double>& scores_a, const std::vector<double>& scores_b,
                        std::int64_t n_resamples, std::uint64_t seed) {
    if (scores_a.size() != scores_b.size()) {
        throw ArgumentError("permutation_test: paired samples must have equal length");
    }
    if (scores_a.empty()) throw ArgumentError("permutation_test: empty samples");
    if (n_resamples < 1) throw ArgumentError("permutation_test: n_resamples must be >= 1");

    const size_t n = scores_a.size();
    std::vector<double> diffs(n);
    double observed = 0.0;
    for (size_t i = 0; i < n; ++i) {
        diffs[i] = scores_a[i] - scores_b[i];
        observed += diffs[i];
    }
    observed = std::fabs(observed / static_cast<double>(n));
    const double tol = 1e-12 * (1.0 + observed);

    if (n < 63 && (1ULL << n) <= static_cast<std::uint64_t>(n_resamples)) {
        const std::uint64_t total = 1ULL << n;
        std::uint64_t hits = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double sum = 0.0;
            for (size_t i = 0; i < n; ++i) {
                sum += (mask >> i) & 1 ? -diffs[i] : diffs[i];
            }
            if (std::fabs(sum / static_cast<double>(n)) >= observed - tol) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(total);
    }

    Rng rng(seed);
    std::int64_t hits = 0;
    for (std::int64_t r = 0; r < n_resamples; ++r) {
        double sum = 0.0;
        size_t i = 0;
        while (i < n) {
            std::uint64_t bits = rng.next_u64();
            for (int b = 0; b < 64 && i < n; ++b, ++i) {
                sum += (bits >> b) & 1 ? -diffs[i] : diffs[i];
            }
        }
        if (std::fabs(sum / static_cast<double>(n)) >= observed - tol) ++hits;
    }
    return static_cast<double>(hits + 1) / static_cast<double>(n_resamples + 1);
}

}  // namespace longview::metrics
