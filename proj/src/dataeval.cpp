#include "align/dataeval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "align/rng.hpp"

namespace align {

double TempoCurve::factor_at(double t) const {
    if (knots.empty()) throw std::runtime_error("TempoCurve: no knots");
    if (t <= knots.front().first) return knots.front().second;
    if (t >= knots.back().first) return knots.back().second;
    size_t i = 1;
    while (knots[i].first < t) ++i;
    double t0 = knots[i - 1].first, t1 = knots[i].first;
    double f0 = knots[i - 1].second, f1 = knots[i].second;
    return f0 + (f1 - f0) * (t - t0) / (t1 - t0);
}

double warp_time(double t, const TempoCurve& curve) {
    if (curve.knots.empty()) throw std::runtime_error("TempoCurve: no knots");
    if (t <= 0.0) return 0.0;
    double acc = 0.0;
    double prev_t = 0.0;
    double prev_f = curve.factor_at(0.0);
    for (const auto& [kt, kf] : curve.knots) {
        if (kt <= prev_t) continue;
        double seg_end = std::min(kt, t);
        double f_end = curve.factor_at(seg_end);
        acc += 0.5 * (prev_f + f_end) * (seg_end - prev_t);
        prev_t = seg_end;
        prev_f = f_end;
        if (seg_end == t) return acc;
    }
    // constant extrapolation past the last knot
    acc += curve.knots.back().second * (t - prev_t);
    return acc;
}

Difficulty difficulty_from_string(const std::string& s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "medium") return Difficulty::Medium;
    if (s == "hard") return Difficulty::Hard;
    throw std::runtime_error("unknown difficulty: " + s);
}

std::string difficulty_to_string(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        default: return "hard";
    }
}

Score random_score(uint64_t seed, int n_notes, int pitch_lo, int pitch_hi) {
    if (n_notes < 1) throw std::runtime_error("random_score: n_notes must be >= 1");
    if (pitch_lo < 21 || pitch_hi > 108 || pitch_lo > pitch_hi)
        throw std::runtime_error("random_score: pitch range must lie in 21..108");

    Rng rng(seed);
    Score s;
    double onset = 0.0;
    for (int i = 0; i < n_notes; ++i) {
        double dur = rng.uniform(0.2, 0.8);
        int pitch = rng.range(pitch_lo, pitch_hi);
        int vel = rng.range(64, 100);
        s.events.push_back({onset, dur, pitch, vel});
        if (rng.uniform() < 0.3) {
            int offset = rng.range(3, 7);
            int p2 = (pitch + offset <= pitch_hi) ? pitch + offset : pitch - offset;
            p2 = std::clamp(p2, pitch_lo, pitch_hi);
            if (p2 != pitch) s.events.push_back({onset, dur, p2, vel});
        }
        onset += rng.uniform(0.15, 0.6);
    }
    return s;
}

namespace {

struct DifficultySpec {
    double snr_db;
    double factor_lo, factor_hi;
};

DifficultySpec spec_for(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return {40.0, 0.9, 1.1};
        case Difficulty::Medium: return {25.0, 0.8, 1.25};
        default: return {15.0, 0.7, 1.4};
    }
}

Timbre perturb_timbre(const Timbre& base, Rng& rng) {
    Timbre t = base;
    // the performance is played on a different "instrument": a fresh spectral
    // envelope (harmonic count, rolloff, per-harmonic jitter, even-harmonic
    // emphasis) rather than a mild jitter of the default
    int n_harm = rng.range(4, 12);
    double rolloff = rng.uniform(0.4, 2.0);
    double even_gain = rng.uniform(0.2, 1.0);
    t.harmonic_amplitudes.assign(size_t(n_harm), 0.0);
    for (int h = 1; h <= n_harm; ++h) {
        double a = std::pow(double(h), -rolloff) * rng.uniform(0.3, 1.7);
        if (h % 2 == 0) a *= even_gain;
        t.harmonic_amplitudes[size_t(h - 1)] = a;
    }
    t.attack = std::max(0.002, base.attack * rng.uniform(0.5, 3.0));
    t.decay = std::max(0.01, base.decay * rng.uniform(0.5, 3.0));
    t.sustain_level = std::clamp(base.sustain_level * rng.uniform(0.5, 1.3), 0.1, 1.0);
    t.release = std::max(0.01, base.release * rng.uniform(0.5, 3.0));
    return t;
}

} // namespace

SyntheticPair make_pair(uint64_t seed, Difficulty difficulty, double target_len_s, int hop,
                        double sample_rate) {
    DifficultySpec ds = spec_for(difficulty);
    Rng rng(seed);

    // ~0.375 s mean inter-onset interval
    int n_notes = std::max(1, int(target_len_s / 0.375));
    SyntheticPair out;
    out.seed = seed;
    out.difficulty = difficulty;
    out.score = random_score(rng.next_u64(), n_notes);

    // tempo curve with a handful of knots across the piece
    double score_len = out.score.length();
    int n_knots = rng.range(4, 6);
    out.curve.knots.push_back({0.0, rng.uniform(ds.factor_lo, ds.factor_hi)});
    for (int k = 1; k < n_knots; ++k)
        out.curve.knots.push_back(
            {score_len * k / double(n_knots - 1), rng.uniform(ds.factor_lo, ds.factor_hi)});

    Score warped;
    for (const auto& n : out.score.events) {
        double on = warp_time(n.onset, out.curve);
        double off = warp_time(n.onset + n.duration, out.curve);
        warped.events.push_back({on, off - on, n.pitch, n.velocity});
    }

    Timbre base = Timbre::piano_default();
    out.score_audio = render(out.score, base, sample_rate);
    out.perf_audio = render(warped, perturb_timbre(base, rng), sample_rate);

    // white noise scaled so the measured SNR hits the target exactly
    out.snr_db = ds.snr_db;
    out.post_gain = 1.0;
    out.perf_clean = out.perf_audio;
    {
        auto& samples = out.perf_audio.samples;
        double p_sig = 0.0;
        for (double v : samples) p_sig += v * v;
        p_sig /= double(samples.size());
        std::vector<double> noise(samples.size());
        double p_noise = 0.0;
        for (double& v : noise) {
            v = rng.gauss();
            p_noise += v * v;
        }
        p_noise /= double(noise.size());
        double gain = std::sqrt(p_sig / (p_noise * std::pow(10.0, ds.snr_db / 10.0)));
        for (size_t i = 0; i < samples.size(); ++i) samples[i] += gain * noise[i];
        double peak = 0.0;
        for (double v : samples) peak = std::max(peak, std::fabs(v));
        if (peak > 0.99) {
            double g = 0.99 / peak;
            for (double& v : samples) v *= g;
            out.post_gain = g;
        }
    }

    // ground truth at every score hop boundary, covering the score audio
    double hop_s = hop / sample_rate;
    int n_frames = 1 + int((out.score_audio.samples.size() - 1) / hop);
    for (int i = 0; i <= n_frames; ++i) {
        double ts = i * hop_s;
        out.gt.map.push_back({ts, warp_time(ts, out.curve)});
    }
    return out;
}

double accuracy(const WarpPath& path, const GroundTruth& gt, int hop, double sample_rate,
                double tolerance_s) {
    if (gt.map.empty()) throw std::runtime_error("accuracy: empty ground truth");
    if (tolerance_s <= 0.0) throw std::runtime_error("accuracy: tolerance must be positive");
    auto timemap = path_to_timemap(path, hop, sample_rate);
    if (timemap.empty()) return 0.0;
    double hop_s = hop / sample_rate;
    int hits = 0;
    for (size_t i = 0; i < timemap.size(); ++i) {
        double truth = gt.perf_at(i * hop_s);
        if (std::fabs(timemap[i] - truth) <= tolerance_s) ++hits;
    }
    return 100.0 * hits / double(timemap.size());
}

} // namespace align
