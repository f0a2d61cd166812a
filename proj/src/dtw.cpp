#include "align/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace align {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// DP restricted to per-row column ranges [lo[i], hi[i]]; full DP when the
// ranges cover everything.
WarpPath dtw_windowed(const CostOracle& cost, const std::vector<int>& lo,
                      const std::vector<int>& hi) {
    int n = cost.rows, m = cost.cols;
    std::vector<size_t> row_off(n + 1, 0);
    for (int i = 0; i < n; ++i) row_off[i + 1] = row_off[i] + size_t(hi[i] - lo[i] + 1);
    std::vector<double> acc(row_off[n], kInf);

    auto cell = [&](int i, int j) -> double& { return acc[row_off[i] + (j - lo[i])]; };
    auto get = [&](int i, int j) -> double {
        if (i < 0 || j < 0 || j < lo[i] || j > hi[i]) return kInf;
        return acc[row_off[i] + (j - lo[i])];
    };

    for (int i = 0; i < n; ++i) {
        for (int j = lo[i]; j <= hi[i]; ++j) {
            double best;
            if (i == 0 && j == 0)
                best = 0.0;
            else
                best = std::min({get(i - 1, j - 1), get(i - 1, j), get(i, j - 1)});
            cell(i, j) = cost.at(i, j) + best;
        }
    }

    WarpPath path;
    path.cost = get(n - 1, m - 1);
    if (!std::isfinite(path.cost)) throw std::runtime_error("dtw: window disconnected");

    int i = n - 1, j = m - 1;
    path.steps.emplace_back(i, j);
    while (i > 0 || j > 0) {
        double d = get(i - 1, j - 1), u = get(i - 1, j), l = get(i, j - 1);
        double best = std::min({d, u, l});
        // tie-break: diagonal, then up, then left
        if (d == best) {
            --i; --j;
        } else if (u == best) {
            --i;
        } else {
            --j;
        }
        path.steps.emplace_back(i, j);
    }
    std::reverse(path.steps.begin(), path.steps.end());
    return path;
}

} // namespace

WarpPath dtw_exact(const CostOracle& cost) {
    if (cost.rows < 1 || cost.cols < 1) throw std::runtime_error("dtw: empty matrix");
    std::vector<int> lo(cost.rows, 0), hi(cost.rows, cost.cols - 1);
    return dtw_windowed(cost, lo, hi);
}

WarpPath dtw_exact(const SimilarityMatrix& m) { return dtw_exact(MatrixOracle(m)); }

WarpPath fastdtw(const CostOracle& cost, int radius) {
    if (cost.rows < 1 || cost.cols < 1) throw std::runtime_error("fastdtw: empty matrix");
    if (radius < 0) throw std::runtime_error("fastdtw: negative radius");
    int n = cost.rows, m = cost.cols;
    if (std::min(n, m) <= std::max(radius + 2, 4)) return dtw_exact(cost);

    // 2x2 mean pooling; edge cells average whatever cells exist
    int cn = (n + 1) / 2, cm = (m + 1) / 2;
    std::vector<double> coarse(size_t(cn) * cm);
    for (int i = 0; i < cn; ++i) {
        for (int j = 0; j < cm; ++j) {
            double sum = 0.0;
            int count = 0;
            for (int di = 0; di < 2; ++di)
                for (int dj = 0; dj < 2; ++dj) {
                    int y = 2 * i + di, x = 2 * j + dj;
                    if (y < n && x < m) {
                        sum += cost.at(y, x);
                        ++count;
                    }
                }
            coarse[size_t(i) * cm + j] = sum / count;
        }
    }

    WarpPath coarse_path = fastdtw(MatrixOracle(coarse.data(), cn, cm), radius);

    // project to fine resolution and dilate by radius
    std::vector<int> lo(n, std::numeric_limits<int>::max()), hi(n, -1);
    for (auto [ci, cj] : coarse_path.steps) {
        int r0 = std::max(0, 2 * ci - radius);
        int r1 = std::min(n - 1, 2 * ci + 1 + radius);
        int c0 = std::max(0, 2 * cj - radius);
        int c1 = std::min(m - 1, 2 * cj + 1 + radius);
        for (int r = r0; r <= r1; ++r) {
            lo[r] = std::min(lo[r], c0);
            hi[r] = std::max(hi[r], c1);
        }
    }
    return dtw_windowed(cost, lo, hi);
}

WarpPath fastdtw(const SimilarityMatrix& m, int radius) {
    return fastdtw(MatrixOracle(m), radius);
}

std::vector<double> path_to_timemap(const WarpPath& path, int hop, double sample_rate) {
    if (path.steps.empty()) return {};
    int n = path.steps.back().first + 1;
    std::vector<double> out(n, 0.0);
    double frame_s = hop / sample_rate;
    size_t k = 0;
    for (int i = 0; i < n; ++i) {
        size_t first = k;
        while (k < path.steps.size() && path.steps[k].first == i) ++k;
        size_t cnt = k - first;
        double j_med;
        if (cnt % 2 == 1)
            j_med = path.steps[first + cnt / 2].second;
        else
            j_med = 0.5 * (path.steps[first + cnt / 2 - 1].second +
                           path.steps[first + cnt / 2].second);
        out[i] = j_med * frame_s;
    }
    return out;
}

std::string path_to_csv(const WarpPath& path) {
    std::ostringstream ss;
    ss << "score_frame,perf_frame\n";
    for (auto [i, j] : path.steps) ss << i << ',' << j << '\n';
    return ss.str();
}

std::vector<uint8_t> path_overlay_pgm(const SimilarityMatrix& m, const WarpPath& path) {
    std::vector<double> img = m.data;
    double hi = img.empty() ? 1.0 : *std::max_element(img.begin(), img.end());
    if (hi <= 0.0) hi = 1.0;
    for (auto [i, j] : path.steps) img[size_t(i) * m.cols + j] = hi;
    return matrix_to_pgm(img, m.rows, m.cols);
}

} // namespace align
