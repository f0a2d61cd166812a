#ifndef ALIGN_DATAEVAL_HPP
#define ALIGN_DATAEVAL_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "align/dtw.hpp"
#include "align/groundtruth.hpp"
#include "align/score.hpp"
#include "align/synth.hpp"

namespace align {

// Piecewise-linear tempo factor over score time; factor > 1 stretches the
// performance relative to the score.
struct TempoCurve {
    std::vector<std::pair<double, double>> knots;  // (score_time_s, factor)

    double factor_at(double t) const;
};

enum class Difficulty { Easy, Medium, Hard };

Difficulty difficulty_from_string(const std::string& s);
std::string difficulty_to_string(Difficulty d);

// score time -> performance time, the running integral of the tempo factor
double warp_time(double t, const TempoCurve& curve);

// Random melody: inter-onset 0.15..0.6 s, durations 0.2..0.8 s, uniform
// pitches, two-note chords with probability 0.3.
Score random_score(uint64_t seed, int n_notes, int pitch_lo = 36, int pitch_hi = 96);

struct SyntheticPair {
    Score score;
    AudioBuffer score_audio;
    AudioBuffer perf_audio;
    AudioBuffer perf_clean;  // warped render before noise, for SNR checks
    GroundTruth gt;
    TempoCurve curve;
    double snr_db;
    double post_gain;  // rescale applied after mixing, 1.0 if none
    uint64_t seed;
    Difficulty difficulty;
};

// Score rendered with the default timbre; performance is the time-warped
// score rendered with a perturbed timbre plus white noise at a
// difficulty-dependent SNR (easy 40 dB, medium 25 dB, hard 15 dB).
SyntheticPair make_pair(uint64_t seed, Difficulty difficulty, double target_len_s = 30.0,
                        int hop = 512, double sample_rate = 22050.0);

// Percentage of score frames whose estimated performance time lies within
// tolerance_s of the ground truth.
double accuracy(const WarpPath& path, const GroundTruth& gt, int hop, double sample_rate,
                double tolerance_s = 0.1);

} // namespace align

#endif
