#ifndef ALIGN_SIMMATRIX_HPP
#define ALIGN_SIMMATRIX_HPP

#include <string>
#include <vector>

#include "align/net.hpp"
#include "align/signal.hpp"

namespace align {

// N x M frame-dissimilarity matrix, rows = score frames, cols = performance
// frames. Distance mode holds raw embedding distances, Binary mode 0/1.
struct SimilarityMatrix {
    enum class Mode { Distance, Binary };

    std::vector<double> data;
    int rows = 0, cols = 0;
    Mode mode = Mode::Distance;
    double threshold = 0.0;  // Binary only

    double at(int i, int j) const { return data[size_t(i) * cols + j]; }
    double& at(int i, int j) { return data[size_t(i) * cols + j]; }
};

// Embeddings are computed once per frame (N+M forward passes), then all
// N*M pairwise distances.
SimilarityMatrix distance_matrix(const NetworkParams& params, const Spectrogram& score_spec,
                                 const Spectrogram& perf_spec, int context = 15);
SimilarityMatrix distance_matrix_serial(const NetworkParams& params, const Spectrogram& score_spec,
                                        const Spectrogram& perf_spec, int context = 15);

// entry = 0 if distance < threshold else 1
SimilarityMatrix binarize(const SimilarityMatrix& dist, double threshold = 0.5);

std::string matrix_to_csv(const SimilarityMatrix& m);

} // namespace align

#endif
