#include "align/simmatrix.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace align {

namespace {

std::vector<std::vector<double>> embed_frames(const NetworkParams& params,
                                              const Spectrogram& spec, int context,
                                              bool parallel) {
    std::vector<std::vector<double>> e(spec.frames);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int t = 0; t < spec.frames; ++t)
        e[t] = forward(params, extract_patch(spec, t, context));
    return e;
}

template <bool Parallel>
SimilarityMatrix distance_matrix_impl(const NetworkParams& params, const Spectrogram& a,
                                      const Spectrogram& b, int context) {
    if (a.kind != b.kind) throw std::runtime_error("distance_matrix: spectrogram kind mismatch");
    if (a.hop != b.hop || a.sample_rate != b.sample_rate)
        throw std::runtime_error("distance_matrix: hop/sample_rate mismatch");

    auto ea = embed_frames(params, a, context, Parallel);
    auto eb = embed_frames(params, b, context, Parallel);

    SimilarityMatrix m;
    m.rows = a.frames;
    m.cols = b.frames;
    m.mode = SimilarityMatrix::Mode::Distance;
    m.data.resize(size_t(m.rows) * m.cols);
#pragma omp parallel for schedule(static) if (Parallel)
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j)
            m.at(i, j) = euclidean(ea[i], eb[j]);
    return m;
}

} // namespace

SimilarityMatrix distance_matrix(const NetworkParams& p, const Spectrogram& a,
                                 const Spectrogram& b, int context) {
    return distance_matrix_impl<true>(p, a, b, context);
}
SimilarityMatrix distance_matrix_serial(const NetworkParams& p, const Spectrogram& a,
                                        const Spectrogram& b, int context) {
    return distance_matrix_impl<false>(p, a, b, context);
}

SimilarityMatrix binarize(const SimilarityMatrix& dist, double threshold) {
    if (dist.mode != SimilarityMatrix::Mode::Distance)
        throw std::runtime_error("binarize: input must be a distance matrix");
    if (threshold <= 0.0) throw std::runtime_error("binarize: threshold must be positive");
    SimilarityMatrix out = dist;
    out.mode = SimilarityMatrix::Mode::Binary;
    out.threshold = threshold;
    for (double& v : out.data) v = (v < threshold) ? 0.0 : 1.0;
    return out;
}

std::string matrix_to_csv(const SimilarityMatrix& m) {
    std::ostringstream ss;
    ss.precision(6);
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) {
            if (j) ss << ',';
            ss << m.at(i, j);
        }
        ss << '\n';
    }
    return ss.str();
}

} // namespace align
