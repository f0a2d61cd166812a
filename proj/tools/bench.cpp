// Timing comparison between the serial reference kernels and the
// OpenMP-parallel versions (render, stft, cqt, distance matrix).

#include <chrono>
#include <cstdio>

#include "align/dataeval.hpp"
#include "align/signal.hpp"
#include "align/simmatrix.hpp"
#include "align/synth.hpp"

using namespace align;
using clock_type = std::chrono::steady_clock;

namespace {

template <typename F>
double time_ms(F&& f) {
    auto t0 = clock_type::now();
    f();
    auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-18s serial %8.1f ms   parallel %8.1f ms   speedup %.2fx\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms);
}

} // namespace

int main() {
    auto score = random_score(1234, 60);
    auto timbre = Timbre::piano_default();

    AudioBuffer audio;
    report("render",
           time_ms([&] { audio = render_serial(score, timbre); }),
           time_ms([&] { audio = render(score, timbre); }));

    Spectrogram st, cq;
    report("stft",
           time_ms([&] { st = stft_serial(audio); }),
           time_ms([&] { st = stft(audio); }));
    report("cqt",
           time_ms([&] { cq = cqt_serial(audio); }),
           time_ms([&] { cq = cqt(audio); }));

    NetConfig cfg;
    cfg.input_w = cq.bins;
    auto params = NetworkParams::init(cfg, 9);
    // a slice keeps the quadratic fill at bench scale
    Spectrogram a = cq;
    a.frames = std::min(a.frames, 200);
    a.data.resize(size_t(a.frames) * a.bins);
    report("distance_matrix",
           time_ms([&] { distance_matrix_serial(params, a, a); }),
           time_ms([&] { distance_matrix(params, a, a); }));
    return 0;
}
