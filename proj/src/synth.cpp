#include "align/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace align {

Timbre Timbre::piano_default() {
    Timbre t;
    for (int h = 1; h <= 8; ++h) t.harmonic_amplitudes.push_back(1.0 / h);
    return t;
}

double pitch_to_hz(int pitch) {
    return 440.0 * std::pow(2.0, (pitch - 69) / 12.0);
}

namespace {

struct Voice {
    size_t start, end;       // sample range [start, end)
    double f0;
    double amp;              // velocity scaling
    double attack, decay, sustain, release;
    double note_len;         // seconds, envelope release starts here
    const std::vector<double>* harmonics;
    int n_harm;              // harmonics below Nyquist
};

double envelope(const Voice& v, double t) {
    double a = v.attack, d = v.decay;
    if (a + d > v.note_len && a + d > 0.0) {
        double s = v.note_len / (a + d);
        a *= s;
        d *= s;
    }
    double level;
    if (t < a)
        level = (a > 0.0) ? t / a : 1.0;
    else if (t < a + d)
        level = (d > 0.0) ? 1.0 - (1.0 - v.sustain) * (t - a) / d : v.sustain;
    else if (t < v.note_len)
        level = v.sustain;
    else if (t < v.note_len + v.release && v.release > 0.0) {
        double at_off = (a + d <= v.note_len) ? v.sustain
                      : (d > 0.0 ? 1.0 - (1.0 - v.sustain) * (v.note_len - a) / d : v.sustain);
        level = at_off * (1.0 - (t - v.note_len) / v.release);
    } else
        level = 0.0;
    return level;
}

double voice_sample(const Voice& v, double t) {
    double env = envelope(v, t);
    if (env <= 0.0) return 0.0;
    double s = 0.0;
    for (int h = 1; h <= v.n_harm; ++h)
        s += (*v.harmonics)[h - 1] * std::sin(2.0 * M_PI * v.f0 * h * t);
    return v.amp * env * s;
}

std::vector<Voice> build_voices(const Score& score, const Timbre& timbre, double fs) {
    std::vector<Voice> voices;
    double nyquist = fs / 2.0;
    for (const auto& n : score.events) {
        Voice v;
        v.f0 = pitch_to_hz(n.pitch);
        v.amp = n.velocity / 127.0;
        v.attack = timbre.attack;
        v.decay = timbre.decay;
        v.sustain = timbre.sustain_level;
        v.release = timbre.release;
        v.note_len = n.duration;
        v.harmonics = &timbre.harmonic_amplitudes;
        v.n_harm = 0;
        int hmax = int(timbre.harmonic_amplitudes.size());
        while (v.n_harm < hmax && (v.n_harm + 1) * v.f0 < nyquist) ++v.n_harm;
        v.start = size_t(std::llround(n.onset * fs));
        v.end = size_t(std::ceil((n.onset + n.duration + timbre.release) * fs));
        voices.push_back(v);
    }
    return voices;
}

template <bool Parallel>
AudioBuffer render_impl(const Score& score, const Timbre& timbre, double fs) {
    AudioBuffer out;
    out.sample_rate = fs;
    if (score.events.empty()) {
        out.samples.assign(size_t(0.5 * fs), 0.0);
        return out;
    }
    auto voices = build_voices(score, timbre, fs);
    size_t n = 0;
    for (const auto& v : voices) n = std::max(n, v.end);
    n += size_t(0.05 * fs);
    out.samples.assign(n, 0.0);

    // Per-sample evaluation: every sample sums its active voices in voice
    // order, so the result is bit-identical regardless of thread count.
    double* buf = out.samples.data();
#pragma omp parallel for schedule(static) if (Parallel)
    for (long long s = 0; s < (long long)n; ++s) {
        double acc = 0.0;
        double t_abs = s / fs;
        for (const auto& v : voices) {
            if (size_t(s) < v.start || size_t(s) >= v.end) continue;
            acc += voice_sample(v, t_abs - v.start / fs);
        }
        buf[s] = acc;
    }

    double peak = 0.0;
    for (double s : out.samples) peak = std::max(peak, std::fabs(s));
    if (peak > 0.9) {
        double g = 0.9 / peak;
        for (double& s : out.samples) s *= g;
    }
    return out;
}

} // namespace

AudioBuffer render(const Score& score, const Timbre& timbre, double fs) {
    return render_impl<true>(score, timbre, fs);
}

AudioBuffer render_serial(const Score& score, const Timbre& timbre, double fs) {
    return render_impl<false>(score, timbre, fs);
}

namespace {

void put_le16(std::vector<uint8_t>& v, uint16_t x) {
    v.push_back(uint8_t(x));
    v.push_back(uint8_t(x >> 8));
}
void put_le32(std::vector<uint8_t>& v, uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back(uint8_t(x >> (8 * i)));
}
uint16_t get_le16(std::span<const uint8_t> b, size_t p) {
    return uint16_t(b[p] | (b[p + 1] << 8));
}
uint32_t get_le32(std::span<const uint8_t> b, size_t p) {
    return uint32_t(b[p]) | (uint32_t(b[p + 1]) << 8) | (uint32_t(b[p + 2]) << 16) |
           (uint32_t(b[p + 3]) << 24);
}

} // namespace

std::vector<uint8_t> wav_write(const AudioBuffer& buf) {
    uint32_t data_bytes = uint32_t(buf.samples.size() * 2);
    std::vector<uint8_t> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_le32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_le32(out, 16);
    put_le16(out, 1);  // PCM
    put_le16(out, 1);  // mono
    uint32_t fs = uint32_t(std::lround(buf.sample_rate));
    put_le32(out, fs);
    put_le32(out, fs * 2);  // byte rate
    put_le16(out, 2);       // block align
    put_le16(out, 16);      // bits
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_le32(out, data_bytes);
    for (double s : buf.samples) {
        double c = std::clamp(s, -1.0, 1.0);
        int16_t q = int16_t(std::lround(c * 32767.0));
        put_le16(out, uint16_t(q));
    }
    return out;
}

AudioBuffer wav_read(std::span<const uint8_t> b) {
    if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
        std::memcmp(b.data() + 8, "WAVE", 4) != 0)
        throw std::runtime_error("WAV: not a RIFF/WAVE file");

    int channels = 0;
    double fs = 0.0;
    size_t data_pos = 0, data_len = 0;
    size_t p = 12;
    while (p + 8 <= b.size()) {
        uint32_t len = get_le32(b, p + 4);
        if (std::memcmp(b.data() + p, "fmt ", 4) == 0) {
            if (len < 16 || p + 8 + len > b.size()) throw std::runtime_error("WAV: bad fmt chunk");
            uint16_t fmt = get_le16(b, p + 8);
            channels = get_le16(b, p + 10);
            fs = get_le32(b, p + 12);
            uint16_t bits = get_le16(b, p + 22);
            if (fmt != 1) throw std::runtime_error("WAV: only PCM format 1 supported");
            if (bits != 16) throw std::runtime_error("WAV: only 16-bit samples supported");
            if (channels < 1 || channels > 2)
                throw std::runtime_error("WAV: only mono/stereo supported");
        } else if (std::memcmp(b.data() + p, "data", 4) == 0) {
            data_pos = p + 8;
            data_len = len;
        }
        p += 8 + len + (len & 1);
    }
    if (channels == 0) throw std::runtime_error("WAV: missing fmt chunk");
    if (data_pos == 0 && data_len > 0) throw std::runtime_error("WAV: missing data chunk");
    if (data_pos + data_len > b.size()) throw std::runtime_error("WAV: truncated data chunk");

    AudioBuffer buf;
    buf.sample_rate = fs;
    size_t frames = data_len / (2 * channels);
    buf.samples.reserve(frames);
    for (size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c)
            acc += int16_t(get_le16(b, data_pos + (i * channels + c) * 2)) / 32767.0;
        buf.samples.push_back(acc / channels);
    }
    return buf;
}

} // namespace align
