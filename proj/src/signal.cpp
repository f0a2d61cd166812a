#include "align/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace align {

void fft(std::vector<std::complex<double>>& buf, bool inverse) {
    size_t n = buf.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::runtime_error("fft: length must be a power of two");
    if (n == 1) return;

    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }

    double sign = inverse ? 1.0 : -1.0;
    for (size_t len = 2; len <= n; len <<= 1) {
        size_t half = len >> 1;
        // fresh twiddles per stage to keep 1e-9 accuracy
        std::vector<std::complex<double>> w(half);
        for (size_t k = 0; k < half; ++k) {
            double a = sign * 2.0 * M_PI * k / double(len);
            w[k] = {std::cos(a), std::sin(a)};
        }
        for (size_t i = 0; i < n; i += len) {
            for (size_t k = 0; k < half; ++k) {
                auto u = buf[i + k];
                auto v = buf[i + k + half] * w[k];
                buf[i + k] = u + v;
                buf[i + k + half] = u - v;
            }
        }
    }
    if (inverse)
        for (auto& x : buf) x /= double(n);
}

namespace {

constexpr double kLogGamma = 100.0;

std::vector<double> hann(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / (n - 1)));
    return w;
}

template <bool Parallel>
Spectrogram stft_impl(const AudioBuffer& audio, int frame_len, int hop) {
    if (frame_len <= 0 || (frame_len & (frame_len - 1)) != 0)
        throw std::runtime_error("stft: frame_len must be a power of two");

    std::vector<double> x = audio.samples;
    if ((int)x.size() < frame_len) x.resize(frame_len, 0.0);

    Spectrogram s;
    s.kind = SpecKind::Stft;
    s.hop = hop;
    s.sample_rate = audio.sample_rate;
    s.bins = frame_len / 2 + 1;
    s.frames = 1 + int((x.size() - frame_len) / hop);
    s.data.assign(size_t(s.frames) * s.bins, 0.0);
    s.bin_freqs.resize(s.bins);
    for (int b = 0; b < s.bins; ++b) s.bin_freqs[b] = b * audio.sample_rate / frame_len;

    auto win = hann(frame_len);
#pragma omp parallel for schedule(static) if (Parallel)
    for (int t = 0; t < s.frames; ++t) {
        std::vector<std::complex<double>> frame(frame_len);
        for (int i = 0; i < frame_len; ++i)
            frame[i] = x[size_t(t) * hop + i] * win[i];
        fft(frame, false);
        for (int b = 0; b < s.bins; ++b)
            s.at(t, b) = std::log1p(kLogGamma * std::abs(frame[b]));
    }
    return s;
}

struct CqtKernel {
    int n_len;           // window length
    int offset;          // start offset relative to the frame center
    std::vector<double> re, im;  // hann * exp(-2*pi*i*f_k*n/fs) / sum(window)
};

std::vector<CqtKernel> build_cqt_kernels(double f_min, int B, int K, double fs,
                                         size_t audio_len) {
    double q = 1.0 / (std::pow(2.0, 1.0 / B) - 1.0);
    std::vector<CqtKernel> kernels(K);
    for (int k = 0; k < K; ++k) {
        double fk = f_min * std::pow(2.0, double(k) / B);
        if (fk >= fs / 2.0)
            throw std::runtime_error("cqt: bin " + std::to_string(k) + " above Nyquist");
        int n_len = int(std::ceil(q * fs / fk));
        n_len = std::min<int>(n_len, int(audio_len));
        n_len = std::max(n_len, 2);
        auto& ker = kernels[k];
        ker.n_len = n_len;
        ker.offset = -n_len / 2;
        ker.re.resize(n_len);
        ker.im.resize(n_len);
        double wsum = 0.0;
        std::vector<double> w = hann(n_len);
        for (double v : w) wsum += v;
        for (int i = 0; i < n_len; ++i) {
            double ph = -2.0 * M_PI * fk * i / fs;
            ker.re[i] = w[i] * std::cos(ph) / wsum;
            ker.im[i] = w[i] * std::sin(ph) / wsum;
        }
    }
    return kernels;
}

template <bool Parallel>
Spectrogram cqt_impl(const AudioBuffer& audio, double f_min, int B, int K, int hop) {
    Spectrogram s;
    s.kind = SpecKind::Cqt;
    s.hop = hop;
    s.sample_rate = audio.sample_rate;
    s.bins = K;
    size_t len = std::max<size_t>(audio.samples.size(), 2);
    s.frames = 1 + int((len - 1) / hop);
    s.data.assign(size_t(s.frames) * K, 0.0);
    s.bin_freqs.resize(K);
    for (int k = 0; k < K; ++k) s.bin_freqs[k] = f_min * std::pow(2.0, double(k) / B);

    auto kernels = build_cqt_kernels(f_min, B, K, audio.sample_rate, len);
    const double* x = audio.samples.data();
    long long n = (long long)audio.samples.size();

#pragma omp parallel for schedule(static) if (Parallel)
    for (int t = 0; t < s.frames; ++t) {
        long long center = (long long)t * hop;
        for (int k = 0; k < K; ++k) {
            const auto& ker = kernels[k];
            long long start = center + ker.offset;
            int i0 = int(std::max(0LL, -start));
            int i1 = int(std::min<long long>(ker.n_len, n - start));
            double re = 0.0, im = 0.0;
            const double* xs = x + start;
            for (int i = i0; i < i1; ++i) {
                re += xs[i] * ker.re[i];
                im += xs[i] * ker.im[i];
            }
            s.at(t, k) = std::log1p(kLogGamma * std::hypot(re, im));
        }
    }
    return s;
}

} // namespace

Spectrogram stft(const AudioBuffer& a, int frame_len, int hop) {
    return stft_impl<true>(a, frame_len, hop);
}
Spectrogram stft_serial(const AudioBuffer& a, int frame_len, int hop) {
    return stft_impl<false>(a, frame_len, hop);
}
Spectrogram cqt(const AudioBuffer& a, double f_min, int B, int K, int hop) {
    return cqt_impl<true>(a, f_min, B, K, hop);
}
Spectrogram cqt_serial(const AudioBuffer& a, double f_min, int B, int K, int hop) {
    return cqt_impl<false>(a, f_min, B, K, hop);
}

Patch extract_patch(const Spectrogram& spec, int center, int context) {
    if (context < 1 || context % 2 == 0)
        throw std::runtime_error("extract_patch: context must be odd and positive");
    if (center < 0 || center >= spec.frames)
        throw std::runtime_error("extract_patch: center out of range");

    Patch p;
    p.frames = context;
    p.bins = spec.bins;
    p.center_frame = center;
    p.data.resize(size_t(context) * spec.bins);
    int half = context / 2;
    for (int r = 0; r < context; ++r) {
        int src = std::clamp(center - half + r, 0, spec.frames - 1);
        for (int b = 0; b < spec.bins; ++b)
            p.data[size_t(r) * spec.bins + b] = spec.at(src, b);
    }

    double mean = 0.0;
    for (double v : p.data) mean += v;
    mean /= double(p.data.size());
    double var = 0.0;
    for (double v : p.data) var += (v - mean) * (v - mean);
    var /= double(p.data.size());
    if (var <= 1e-24) {
        std::fill(p.data.begin(), p.data.end(), 0.0);
    } else {
        double inv = 1.0 / std::sqrt(var);
        for (double& v : p.data) v = (v - mean) * inv;
    }
    return p;
}

std::vector<uint8_t> matrix_to_pgm(const std::vector<double>& data, int rows, int cols) {
    double lo = data.empty() ? 0.0 : data[0], hi = lo;
    for (double v : data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double scale = (hi > lo) ? 255.0 / (hi - lo) : 0.0;

    std::string header = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + data.size());
    for (double v : data) out.push_back(uint8_t(std::lround((v - lo) * scale)));
    return out;
}

std::vector<uint8_t> spectrogram_to_pgm(const Spectrogram& spec) {
    // transpose so rows are bins, highest frequency on top
    std::vector<double> img(size_t(spec.bins) * spec.frames);
    for (int b = 0; b < spec.bins; ++b)
        for (int t = 0; t < spec.frames; ++t)
            img[size_t(spec.bins - 1 - b) * spec.frames + t] = spec.at(t, b);
    return matrix_to_pgm(img, spec.bins, spec.frames);
}

} // namespace align
