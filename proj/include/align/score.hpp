#ifndef ALIGN_SCORE_HPP
#define ALIGN_SCORE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace align {

struct NoteEvent {
    double onset;     // seconds, >= 0
    double duration;  // seconds, > 0
    int pitch;        // MIDI note number 0..127
    int velocity;     // 1..127
};

struct Score {
    std::vector<NoteEvent> events;  // sorted by onset

    double length() const {
        double len = 0.0;
        for (const auto& e : events) {
            double end = e.onset + e.duration;
            if (end > len) len = end;
        }
        return len;
    }
};

// Tempo changes as (tick, microseconds per quarter note). Defaults to a
// single entry (0, 500000) when the file carries no tempo meta event.
struct TempoMap {
    std::vector<std::pair<uint32_t, uint32_t>> changes{{0, 500000}};

    double tick_to_seconds(uint32_t tick, int ticks_per_quarter) const;
};

struct ParsedScore {
    Score score;
    std::vector<std::string> warnings;
};

// Variable-length quantity. Returns (value, bytes consumed). Throws
// std::runtime_error on truncated input or more than 4 bytes.
std::pair<uint32_t, size_t> decode_vlq(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_vlq(uint32_t value);

// Parse SMF format 0/1 with ticks-per-quarter division. All channels are
// merged; dangling note-ons are closed at end-of-track with a warning.
ParsedScore parse_smf(std::span<const uint8_t> bytes);

// Format-0 writer, single tempo 500000 us/quarter, events quantized to the
// nearest tick. ticks_per_quarter must lie in 24..960.
std::vector<uint8_t> write_smf(const Score& score, int ticks_per_quarter);

} // namespace align

#endif
