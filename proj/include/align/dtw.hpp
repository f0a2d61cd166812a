#ifndef ALIGN_DTW_HPP
#define ALIGN_DTW_HPP

#include <utility>
#include <vector>

#include "align/simmatrix.hpp"

namespace align {

// Monotone path from (0,0) to (rows-1, cols-1); steps in {(1,0),(0,1),(1,1)}.
struct WarpPath {
    std::vector<std::pair<int, int>> steps;
    double cost = 0.0;
};

// Pure cell access over an N x M cost matrix.
struct CostOracle {
    int rows = 0, cols = 0;
    virtual double at(int i, int j) const = 0;
    virtual ~CostOracle() = default;
};

struct MatrixOracle final : CostOracle {
    const double* data;
    MatrixOracle(const double* d, int r, int c) : data(d) {
        rows = r;
        cols = c;
    }
    explicit MatrixOracle(const SimilarityMatrix& m) : MatrixOracle(m.data.data(), m.rows, m.cols) {}
    double at(int i, int j) const override { return data[size_t(i) * cols + j]; }
};

// Classical O(N*M) DP with backtracking; ties broken diagonal > up > left.
WarpPath dtw_exact(const CostOracle& cost);
WarpPath dtw_exact(const SimilarityMatrix& m);

// Multiresolution approximation: 2x2 mean-pool the cost matrix, solve
// recursively, project the coarse path, dilate by `radius` and run the DP
// inside that window. Cost is always >= the exact cost.
WarpPath fastdtw(const CostOracle& cost, int radius = 10);
WarpPath fastdtw(const SimilarityMatrix& m, int radius = 10);

// Per score frame, the median matched performance frame converted to
// seconds; index i maps to time i*hop/sample_rate.
std::vector<double> path_to_timemap(const WarpPath& path, int hop, double sample_rate);

std::string path_to_csv(const WarpPath& path);

// PGM of the matrix with path cells forced to full intensity
std::vector<uint8_t> path_overlay_pgm(const SimilarityMatrix& m, const WarpPath& path);

} // namespace align

#endif
