#ifndef ALIGN_SYNTH_HPP
#define ALIGN_SYNTH_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "align/score.hpp"

namespace align {

struct AudioBuffer {
    std::vector<double> samples;  // amplitudes in [-1, 1]
    double sample_rate = 22050.0;

    double duration() const { return samples.size() / sample_rate; }
};

// Additive-synthesis voice: relative harmonic amplitudes plus a linear
// ADSR envelope. At most 16 harmonics.
struct Timbre {
    std::vector<double> harmonic_amplitudes;
    double attack = 0.01;
    double decay = 0.05;
    double sustain_level = 0.7;
    double release = 0.05;

    // 1/h rolloff over 8 harmonics
    static Timbre piano_default();
};

double pitch_to_hz(int pitch);

// Deterministic additive render; harmonics above Nyquist are skipped, the
// mix is peak-normalized to 0.9 when it exceeds 0.9. An empty score yields
// 0.5 s of silence.
AudioBuffer render(const Score& score, const Timbre& timbre, double sample_rate = 22050.0);

// Single-threaded reference, bit-identical to render()
AudioBuffer render_serial(const Score& score, const Timbre& timbre, double sample_rate = 22050.0);

// RIFF/WAVE PCM16 mono little-endian. Stereo input is down-mixed by
// averaging; non-PCM formats are rejected.
std::vector<uint8_t> wav_write(const AudioBuffer& buf);
AudioBuffer wav_read(std::span<const uint8_t> bytes);

} // namespace align

#endif
