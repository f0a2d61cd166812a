// End-to-end acceptance suite. Each criterion prints a single PASS/FAIL
// line (criterion 5 also prints its sub-checks); the exit code is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "align/dataeval.hpp"
#include "align/dataset.hpp"
#include "align/dtw.hpp"
#include "align/net.hpp"
#include "align/rng.hpp"
#include "align/score.hpp"
#include "align/signal.hpp"
#include "align/simmatrix.hpp"
#include "align/synth.hpp"
#include "test_util.hpp"

using namespace align;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

bool report(int id, bool ok, const char* what, double elapsed_s, double limit_s) {
    std::printf("criterion %d %s  %s (%.1f s, limit %.0f s)\n", id, ok ? "PASS" : "FAIL", what,
                elapsed_s, limit_s);
    return ok;
}

std::vector<double> random_cost(Rng& rng, int n, int m) {
    std::vector<double> mat(size_t(n) * m);
    for (double& v : mat) v = rng.uniform(0.0, 2.0);
    return mat;
}

// ---- criterion 1: exact DTW equals exhaustive path enumeration ----
bool criterion_dtw_optimality() {
    auto t0 = clock_type::now();
    Rng rng(101);
    bool ok = true;
    auto run = [&](int n, int trials) {
        for (int t = 0; t < trials && ok; ++t) {
            auto mat = random_cost(rng, n, n);
            double best = testutil::brute_force_cost(mat, n, n);
            auto path = dtw_exact(MatrixOracle(mat.data(), n, n));
            if (std::fabs(path.cost - best) > 1e-12) ok = false;
        }
    };
    run(4, 1000);
    run(5, 200);
    double el = seconds_since(t0);
    return report(1, ok && el < 10.0, "exact dtw cost equals exhaustive minimum", el, 10.0);
}

// ---- criterion 2: fastdtw upper-bounds exact, exact at full radius ----
bool criterion_fastdtw_bounds() {
    auto t0 = clock_type::now();
    Rng rng(202);
    bool ok = true;
    for (int t = 0; t < 100 && ok; ++t) {
        auto mat = random_cost(rng, 64, 64);
        MatrixOracle oracle(mat.data(), 64, 64);
        double exact = dtw_exact(oracle).cost;
        if (fastdtw(oracle, 10).cost < exact - 1e-12) ok = false;
        if (std::fabs(fastdtw(oracle, 64).cost - exact) > 1e-9) ok = false;
    }
    double el = seconds_since(t0);
    return report(2, ok && el < 30.0, "fastdtw cost >= exact, equal at full radius", el, 30.0);
}

// ---- criterion 3: analytic gradients vs central finite differences ----
bool criterion_gradients() {
    auto t0 = clock_type::now();
    NetConfig cfg;
    cfg.input_h = 9;
    cfg.input_w = 12;
    cfg.conv1_filters = 2;
    cfg.conv2_filters = 2;
    cfg.embed_dim = 8;
    auto params = NetworkParams::init(cfg, 303);

    Rng rng(304);
    auto make_patch = [&] {
        Patch p;
        p.frames = cfg.input_h;
        p.bins = cfg.input_w;
        p.data.resize(size_t(p.frames) * p.bins);
        for (double& v : p.data) v = rng.uniform(-1.0, 1.0);
        return p;
    };
    Patch a = make_patch();
    Patch b = make_patch();

    bool ok = true;
    for (int y : {0, 1}) {
        double d = euclidean(forward(params, a), forward(params, b));
        if (!(d > 0.0)) ok = false;
        double margin = (y == 1) ? 2.0 * d : 1.0;  // y=1 with 0 < D < m
        auto analytic = backward(params, a, b, y, margin);
        const double eps = 1e-4;
        auto ts = params.tensors();
        auto gs = analytic.grads.tensors();
        for (size_t t = 0; t < ts.size() && ok; ++t) {
            for (size_t i = 0; i < ts[t]->data.size(); ++i) {
                double keep = ts[t]->data[i];
                ts[t]->data[i] = keep + eps;
                double lp =
                    contrastive_loss(euclidean(forward(params, a), forward(params, b)), y, margin);
                ts[t]->data[i] = keep - eps;
                double lm =
                    contrastive_loss(euclidean(forward(params, a), forward(params, b)), y, margin);
                ts[t]->data[i] = keep;
                double numeric = (lp - lm) / (2.0 * eps);
                double ga = gs[t]->data[i];
                double denom = std::max({std::fabs(ga), std::fabs(numeric), 1e-6});
                if (std::fabs(ga - numeric) / denom >= 1e-4) {
                    ok = false;
                    break;
                }
            }
        }
    }
    double el = seconds_since(t0);
    return report(3, ok && el < 60.0, "analytic gradients match finite differences", el, 60.0);
}

// ---- criterion 4: fft vs direct DFT, Parseval, CQT/STFT frequency anchors ----
bool criterion_signal() {
    auto t0 = clock_type::now();
    Rng rng(404);
    bool ok = true;

    for (int n = 2; n <= 512; n *= 2) {
        std::vector<std::complex<double>> x(size_t(n), 0.0);
        for (auto& v : x) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        auto ref = testutil::dft(x, false);
        auto got = x;
        fft(got, false);
        double max_err = 0.0, max_ref = 0.0;
        double in_energy = 0.0, out_energy = 0.0;
        for (int k = 0; k < n; ++k) {
            max_err = std::max(max_err, std::abs(got[size_t(k)] - ref[size_t(k)]));
            max_ref = std::max(max_ref, std::abs(ref[size_t(k)]));
            in_energy += std::norm(x[size_t(k)]);
            out_energy += std::norm(got[size_t(k)]);
        }
        if (max_err / max_ref > 1e-9) ok = false;
        if (std::fabs(out_energy / n - in_energy) / in_energy > 1e-9) ok = false;
    }

    // A4 anchor: with f_min = C1 the 440 Hz bin index is 12*log2(440/f_min)
    const double f_min = 32.70319566257483;
    int a4_bin = int(std::lround(12.0 * std::log2(440.0 / f_min)));
    Score tone;
    tone.events.push_back({0.0, 2.0, 69, 100});
    Timbre pure;
    pure.harmonic_amplitudes = {1.0};
    auto audio = render(tone, pure);
    auto cq = cqt(audio);
    if (std::fabs(cq.bin_freqs[size_t(a4_bin)] - 440.0) > 1e-6) ok = false;

    auto st = stft(audio);
    auto argmax_bin = [](const Spectrogram& s) {
        int frame = s.frames / 2, best = 0;
        for (int b = 1; b < s.bins; ++b)
            if (s.at(frame, b) > s.at(frame, best)) best = b;
        return best;
    };
    if (argmax_bin(st) != int(std::lround(440.0 * 1024.0 / 22050.0))) ok = false;
    if (argmax_bin(cq) != a4_bin) ok = false;

    double el = seconds_since(t0);
    return report(4, ok, "fft vs direct DFT, Parseval, 440 Hz bin anchors", el, 60.0);
}

// ---- criterion 5: scaled end-to-end experiment ----
struct GridAccuracy {
    // [mode][transform]: 0 binary, 1 distance / 0 stft, 1 cqt
    double cell[2][2] = {};
};

struct PieceSpecs {
    Spectrogram score_stft, perf_stft, score_cqt, perf_cqt;
    GroundTruth gt;
};

PieceSpecs specs_for(const SyntheticPair& p) {
    PieceSpecs s;
    s.score_stft = stft(p.score_audio);
    s.perf_stft = stft(p.perf_audio);
    s.score_cqt = cqt(p.score_audio);
    s.perf_cqt = cqt(p.perf_audio);
    s.gt = p.gt;
    return s;
}

NetworkParams train_transform(const std::vector<AlignedSpecs>& data, int input_w, uint64_t seed) {
    auto pairs = sample_pairs(data, 2000, seed);
    NetConfig cfg;
    cfg.input_w = input_w;
    TrainConfig tc;
    tc.epochs = 10;
    tc.rng_seed = seed + 1;
    return train(tc, cfg, pairs).params;
}

double eval_cell(const NetworkParams& params, const Spectrogram& score_spec,
                 const Spectrogram& perf_spec, const GroundTruth& gt, bool binary) {
    auto dist = distance_matrix(params, score_spec, perf_spec);
    const SimilarityMatrix& m = binary ? binarize(dist, 0.5) : dist;
    auto path = fastdtw(m, 10);
    return accuracy(path, gt, 512, 22050.0, 0.1);
}

bool criterion_end_to_end() {
    auto t0 = clock_type::now();
    const double limit_s = 900.0;

    std::vector<PieceSpecs> train_specs;
    train_specs.reserve(40);
    for (int i = 0; i < 40; ++i) train_specs.push_back(specs_for(make_pair(100 + i, Difficulty::Medium)));

    auto view = [&](bool use_cqt) {
        std::vector<AlignedSpecs> v;
        for (const auto& s : train_specs)
            v.push_back(use_cqt ? AlignedSpecs{&s.score_cqt, &s.perf_cqt, &s.gt}
                                : AlignedSpecs{&s.score_stft, &s.perf_stft, &s.gt});
        return v;
    };
    auto model_stft = train_transform(view(false), 513, 11);
    auto model_cqt = train_transform(view(true), 84, 12);
    auto untrained_cqt = NetworkParams::init(model_cqt.cfg, 999);
    train_specs.clear();
    train_specs.shrink_to_fit();

    GridAccuracy grid;
    double untrained_dcqt = 0.0;
    for (int i = 0; i < 10; ++i) {
        auto s = specs_for(make_pair(500 + i, Difficulty::Medium));
        grid.cell[0][0] += eval_cell(model_stft, s.score_stft, s.perf_stft, s.gt, true);
        grid.cell[1][0] += eval_cell(model_stft, s.score_stft, s.perf_stft, s.gt, false);
        grid.cell[0][1] += eval_cell(model_cqt, s.score_cqt, s.perf_cqt, s.gt, true);
        grid.cell[1][1] += eval_cell(model_cqt, s.score_cqt, s.perf_cqt, s.gt, false);
        untrained_dcqt += eval_cell(untrained_cqt, s.score_cqt, s.perf_cqt, s.gt, false);
    }
    for (auto& row : grid.cell)
        for (double& c : row) c /= 10.0;
    untrained_dcqt /= 10.0;

    double dcqt = grid.cell[1][1];
    double min_cell = dcqt, max_cell = dcqt;
    for (auto& row : grid.cell)
        for (double c : row) {
            min_cell = std::min(min_cell, c);
            max_cell = std::max(max_cell, c);
        }

    std::printf("  grid (held-out mean accuracy %%):  stft    cqt\n");
    std::printf("    binary                          %5.1f  %5.1f\n", grid.cell[0][0],
                grid.cell[0][1]);
    std::printf("    distance                        %5.1f  %5.1f\n", grid.cell[1][0],
                grid.cell[1][1]);

    double el = seconds_since(t0);
    bool a = dcqt >= 85.0;
    bool b = min_cell >= 60.0;
    bool c = untrained_dcqt <= dcqt - 15.0;
    bool d = dcqt >= max_cell - 2.0;
    bool e = el < limit_s;
    std::printf("  [5a] %s distance+cqt %.1f%% >= 85%%\n", a ? "pass" : "FAIL", dcqt);
    std::printf("  [5b] %s min grid cell %.1f%% >= 60%%\n", b ? "pass" : "FAIL", min_cell);
    std::printf("  [5c] %s untrained distance+cqt %.1f%% <= trained %.1f%% - 15 points\n",
                c ? "pass" : "FAIL", untrained_dcqt, dcqt);
    std::printf("  [5d] %s distance+cqt within 2 points of best cell %.1f%%\n", d ? "pass" : "FAIL",
                max_cell);
    std::printf("  [5e] %s runtime %.0f s < %.0f s\n", e ? "pass" : "FAIL", el, limit_s);
    return report(5, a && b && c && d && e, "scaled end-to-end experiment", el, limit_s);
}

// ---- criterion 6: self-alignment is the diagonal ----
bool criterion_self_alignment() {
    auto t0 = clock_type::now();
    auto score = random_score(606, 40);
    auto audio = render(score, Timbre::piano_default());
    auto spec = cqt(audio);
    auto params = NetworkParams::init(NetConfig{.input_w = spec.bins}, 607);

    auto dist = distance_matrix(params, spec, spec);
    auto path = dtw_exact(dist);

    bool ok = int(path.steps.size()) == spec.frames;
    for (size_t i = 0; ok && i < path.steps.size(); ++i)
        if (path.steps[i] != std::make_pair(int(i), int(i))) ok = false;

    GroundTruth identity;
    double hop_s = 512.0 / 22050.0;
    for (int i = 0; i <= spec.frames; ++i) identity.map.push_back({i * hop_s, i * hop_s});
    if (accuracy(path, identity, 512, 22050.0, hop_s) != 100.0) ok = false;

    double el = seconds_since(t0);
    return report(6, ok, "self-alignment yields the diagonal path", el, 60.0);
}

// ---- criterion 7: CLI byte-identical determinism ----
std::map<std::string, std::vector<uint8_t>> snapshot(const fs::path& root) {
    std::map<std::string, std::vector<uint8_t>> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            out[fs::relative(e.path(), root).string()] = read_file(e.path());
    return out;
}

bool criterion_determinism() {
    auto t0 = clock_type::now();
    const char* cli = std::getenv("ALIGN_CLI");
    if (!cli) {
        std::printf("  ALIGN_CLI not set\n");
        return report(7, false, "cli determinism across two runs", 0.0, 120.0);
    }
    fs::path root = fs::temp_directory_path() / "align_accept_det";

    auto run_all = [&] {
        fs::remove_all(root);
        fs::create_directories(root);
        std::string d = (root / "data").string();
        std::string o = (root / "out").string();
        std::string cmds[] = {
            std::string(cli) + " gen-data --out " + d +
                " --count 3 --length 8 --difficulty medium --seed 42",
            std::string(cli) + " train --data " + d + " --model " + o + "/model.bin --out " + o +
                " --transform cqt --pairs 64 --epochs 2 --seed 7",
            std::string(cli) + " align --score " + d + "/piece_0000/score.mid --perf " + d +
                "/piece_0000/perf.wav --model " + o + "/model.bin --out " + root.string() +
                "/aligned --transform cqt --mode distance --dtw fast --radius 10",
        };
        for (const auto& c : cmds)
            if (std::system((c + " >/dev/null 2>&1").c_str()) != 0) return false;
        return true;
    };

    bool ok = run_all();
    auto first = ok ? snapshot(root) : std::map<std::string, std::vector<uint8_t>>{};
    ok = ok && run_all();
    ok = ok && snapshot(root) == first && !first.empty();
    fs::remove_all(root);

    double el = seconds_since(t0);
    return report(7, ok, "gen-data/train/align byte-identical across runs", el, 120.0);
}

// ---- criterion 8: format round trips ----
bool criterion_round_trips() {
    auto t0 = clock_type::now();
    bool ok = true;

    const int tpq = 480;
    const double half_tick_s = 0.5 * 0.5 / tpq;
    for (uint64_t seed = 1; seed <= 5 && ok; ++seed) {
        auto score = random_score(800 + seed, 60);
        auto parsed = parse_smf(write_smf(score, tpq)).score;
        if (parsed.events.size() != score.events.size()) {
            ok = false;
            break;
        }
        auto key = [](const NoteEvent& e) { return std::make_tuple(e.onset, e.pitch, e.duration); };
        auto a = score.events, b = parsed.events;
        std::sort(a.begin(), a.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
        std::sort(b.begin(), b.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
        for (size_t i = 0; i < a.size(); ++i) {
            if (std::fabs(a[i].onset - b[i].onset) > half_tick_s + 1e-9) ok = false;
            if (std::fabs((a[i].onset + a[i].duration) - (b[i].onset + b[i].duration)) >
                half_tick_s + 1e-9)
                ok = false;
            if (a[i].pitch != b[i].pitch) ok = false;
        }
    }

    Rng rng(808);
    AudioBuffer buf;
    buf.samples.resize(10000);
    for (double& v : buf.samples) v = rng.uniform(-1.0, 1.0);
    auto back = wav_read(wav_write(buf));
    if (back.samples.size() != buf.samples.size()) ok = false;
    for (size_t i = 0; ok && i < buf.samples.size(); ++i)
        if (std::fabs(back.samples[i] - buf.samples[i]) > 1.0 / 32768.0) ok = false;

    auto params = NetworkParams::init(NetConfig{}, 809);
    auto bytes = save_params(params);
    auto loaded = load_params(bytes, params.cfg.input_h, params.cfg.input_w);
    if (save_params(loaded) != bytes) ok = false;

    double el = seconds_since(t0);
    return report(8, ok, "smf/wav/model round trips", el, 60.0);
}

} // namespace

int main() {
    int failed = 0;
    failed += !criterion_dtw_optimality();
    failed += !criterion_fastdtw_bounds();
    failed += !criterion_gradients();
    failed += !criterion_signal();
    failed += !criterion_end_to_end();
    failed += !criterion_self_alignment();
    failed += !criterion_determinism();
    failed += !criterion_round_trips();
    std::printf("acceptance: %d/8 criteria passed\n", 8 - failed);
    return failed;
}
