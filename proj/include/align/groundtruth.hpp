#ifndef ALIGN_GROUNDTRUTH_HPP
#define ALIGN_GROUNDTRUTH_HPP

#include <stdexcept>
#include <utility>
#include <vector>

namespace align {

// Exact score-time -> performance-time correspondence, sampled at score
// hop boundaries. Strictly increasing in both coordinates.
struct GroundTruth {
    std::vector<std::pair<double, double>> map;  // (score_time_s, perf_time_s)

    // linear interpolation, clamped at the ends
    double perf_at(double score_time) const {
        if (map.empty()) throw std::runtime_error("GroundTruth: empty map");
        if (score_time <= map.front().first) return map.front().second;
        if (score_time >= map.back().first) return map.back().second;
        size_t lo = 0, hi = map.size() - 1;
        while (hi - lo > 1) {
            size_t mid = (lo + hi) / 2;
            if (map[mid].first <= score_time) lo = mid; else hi = mid;
        }
        double t0 = map[lo].first, t1 = map[hi].first;
        double u = (score_time - t0) / (t1 - t0);
        return map[lo].second + u * (map[hi].second - map[lo].second);
    }
};

} // namespace align

#endif
