#ifndef ALIGN_SIGNAL_HPP
#define ALIGN_SIGNAL_HPP

#include <complex>
#include <cstdint>
#include <vector>

#include "align/synth.hpp"

namespace align {

enum class SpecKind { Stft, Cqt };

// Log-magnitude time-frequency matrix, row-major frames x bins.
struct Spectrogram {
    std::vector<double> data;
    int frames = 0;
    int bins = 0;
    int hop = 0;
    double sample_rate = 0.0;
    SpecKind kind = SpecKind::Stft;
    std::vector<double> bin_freqs;

    double at(int frame, int bin) const { return data[size_t(frame) * bins + bin]; }
    double& at(int frame, int bin) { return data[size_t(frame) * bins + bin]; }
};

// Fixed-size normalized window of spectrogram frames (zero mean, unit
// population std; all-zero if the raw patch was constant).
struct Patch {
    std::vector<double> data;  // frames x bins row-major
    int frames = 0;
    int bins = 0;
    int center_frame = 0;
};

// In-place radix-2 FFT; inverse is scaled by 1/N. Length must be a power
// of two.
void fft(std::vector<std::complex<double>>& buf, bool inverse);

// Hann-windowed STFT; magnitudes of bins 0..frame_len/2 compressed as
// log(1 + 100*mag). Audio shorter than frame_len is zero-padded to one frame.
Spectrogram stft(const AudioBuffer& audio, int frame_len = 1024, int hop = 512);
Spectrogram stft_serial(const AudioBuffer& audio, int frame_len = 1024, int hop = 512);

// Direct constant-Q transform: center frequencies f_min*2^(k/B), per-bin
// Hann windows of length Q*fs/f_k centered on t*hop. Same log compression
// as stft.
Spectrogram cqt(const AudioBuffer& audio, double f_min = 32.70319566257483, int bins_per_octave = 12,
                int n_bins = 84, int hop = 512);
Spectrogram cqt_serial(const AudioBuffer& audio, double f_min = 32.70319566257483, int bins_per_octave = 12,
                       int n_bins = 84, int hop = 512);

// Context frames around `center` (odd context), edge frames replicated,
// then zero-mean/unit-variance normalization.
Patch extract_patch(const Spectrogram& spec, int center, int context = 15);

// 8-bit PGM, rows = bins (low frequency at the bottom row), columns =
// frames, affinely rescaled to 0..255.
std::vector<uint8_t> spectrogram_to_pgm(const Spectrogram& spec);

std::vector<uint8_t> matrix_to_pgm(const std::vector<double>& data, int rows, int cols);

} // namespace align

#endif
