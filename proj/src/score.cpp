#include "align/score.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace align {

double TempoMap::tick_to_seconds(uint32_t tick, int tpq) const {
    double seconds = 0.0;
    for (size_t i = 0; i < changes.size(); ++i) {
        uint32_t seg_start = changes[i].first;
        uint32_t seg_end = (i + 1 < changes.size()) ? changes[i + 1].first : tick;
        if (seg_start >= tick) break;
        uint32_t until = std::min(seg_end, tick);
        seconds += double(until - seg_start) * changes[i].second * 1e-6 / tpq;
        if (until == tick) break;
    }
    return seconds;
}

std::pair<uint32_t, size_t> decode_vlq(std::span<const uint8_t> bytes) {
    if (bytes.empty()) throw std::runtime_error("VLQ: empty input");
    uint32_t value = 0;
    size_t i = 0;
    for (;; ++i) {
        if (i >= bytes.size()) throw std::runtime_error("VLQ: truncated");
        if (i >= 4) throw std::runtime_error("VLQ: more than 4 bytes");
        value = (value << 7) | (bytes[i] & 0x7f);
        if ((bytes[i] & 0x80) == 0) break;
    }
    return {value, i + 1};
}

std::vector<uint8_t> encode_vlq(uint32_t value) {
    std::vector<uint8_t> out;
    out.push_back(value & 0x7f);
    value >>= 7;
    while (value) {
        out.push_back(0x80 | (value & 0x7f));
        value >>= 7;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

namespace {

struct Reader {
    std::span<const uint8_t> data;
    size_t pos = 0;

    size_t remaining() const { return data.size() - pos; }

    uint8_t u8() {
        if (pos >= data.size()) throw std::runtime_error("SMF: truncated");
        return data[pos++];
    }
    uint16_t u16() {
        uint16_t hi = u8();
        return uint16_t((hi << 8) | u8());
    }
    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
        return v;
    }
    uint32_t vlq() {
        auto [v, n] = decode_vlq(data.subspan(pos));
        pos += n;
        return v;
    }
    void skip(size_t n) {
        if (remaining() < n) throw std::runtime_error("SMF: truncated chunk");
        pos += n;
    }
};

struct TickNote {
    uint32_t on_tick;
    uint32_t off_tick;
    int pitch;
    int velocity;
};

} // namespace

ParsedScore parse_smf(std::span<const uint8_t> bytes) {
    Reader r{bytes};
    if (r.remaining() < 14 || r.u8() != 'M' || r.u8() != 'T' || r.u8() != 'h' || r.u8() != 'd')
        throw std::runtime_error("SMF: bad magic, expected MThd");
    uint32_t hdr_len = r.u32();
    if (hdr_len < 6) throw std::runtime_error("SMF: short header");
    uint16_t format = r.u16();
    if (format > 1) throw std::runtime_error("SMF: unsupported format " + std::to_string(format));
    uint16_t ntrks = r.u16();
    uint16_t division = r.u16();
    if (division & 0x8000) throw std::runtime_error("SMF: SMPTE division unsupported");
    if (division == 0) throw std::runtime_error("SMF: zero division");
    r.skip(hdr_len - 6);

    std::vector<TickNote> notes;
    std::vector<std::pair<uint32_t, uint32_t>> tempo_events;
    std::vector<std::string> warnings;

    for (uint16_t trk = 0; trk < ntrks; ++trk) {
        if (r.remaining() < 8) throw std::runtime_error("SMF: missing track chunk");
        char c0 = char(r.u8()), c1 = char(r.u8()), c2 = char(r.u8()), c3 = char(r.u8());
        uint32_t chunk_len = r.u32();
        if (c0 != 'M' || c1 != 'T' || c2 != 'r' || c3 != 'k') {
            // unknown chunk type: skip it, does not count as a track
            r.skip(chunk_len);
            --trk;
            continue;
        }
        if (r.remaining() < chunk_len) throw std::runtime_error("SMF: truncated track");
        size_t track_end = r.pos + chunk_len;

        uint32_t tick = 0;
        uint8_t running_status = 0;
        // FIFO of pending note-ons per (channel, pitch); indices into notes
        std::vector<std::vector<int>> pending((size_t)16 * 128);

        while (r.pos < track_end) {
            tick += r.vlq();
            if (r.pos >= track_end) throw std::runtime_error("SMF: truncated event");
            uint8_t status = r.data[r.pos];
            if (status & 0x80) {
                r.pos++;
                if (status < 0xf0) running_status = status;
            } else {
                if (running_status == 0) throw std::runtime_error("SMF: data byte without status");
                status = running_status;
            }

            if (status == 0xff) {
                uint8_t type = r.u8();
                uint32_t len = r.vlq();
                if (type == 0x51 && len == 3) {
                    uint32_t uspq = (uint32_t(r.u8()) << 16) | (uint32_t(r.u8()) << 8) | r.u8();
                    tempo_events.emplace_back(tick, uspq);
                } else if (type == 0x2f) {
                    r.skip(len);
                    break;  // end of track
                } else {
                    r.skip(len);
                }
            } else if (status == 0xf0 || status == 0xf7) {
                uint32_t len = r.vlq();
                r.skip(len);
            } else {
                uint8_t kind = status & 0xf0;
                uint8_t channel = status & 0x0f;
                if (kind == 0x90 || kind == 0x80) {
                    uint8_t pitch = r.u8() & 0x7f;
                    uint8_t vel = r.u8() & 0x7f;
                    size_t key = size_t(channel) * 128 + pitch;
                    bool is_on = (kind == 0x90 && vel > 0);
                    if (is_on) {
                        notes.push_back({tick, tick, int(pitch), int(vel)});
                        pending[key].push_back(int(notes.size()) - 1);
                    } else if (!pending[key].empty()) {
                        // oldest pending note-on first
                        notes[pending[key].front()].off_tick = tick;
                        pending[key].erase(pending[key].begin());
                    }
                    // unmatched note-off ignored
                } else if (kind == 0xc0 || kind == 0xd0) {
                    r.skip(1);
                } else {
                    r.skip(2);
                }
            }
        }

        for (auto& fifo : pending) {
            for (int idx : fifo) {
                notes[idx].off_tick = tick;
                warnings.push_back("dangling note-on pitch " + std::to_string(notes[idx].pitch) +
                                   " closed at end of track");
            }
        }
        r.pos = track_end;
    }

    TempoMap tempo;
    if (!tempo_events.empty()) {
        std::sort(tempo_events.begin(), tempo_events.end());
        if (tempo_events.front().first != 0)
            tempo_events.insert(tempo_events.begin(), {0, 500000});
        tempo.changes = std::move(tempo_events);
    }

    ParsedScore out;
    out.warnings = std::move(warnings);
    for (const auto& n : notes) {
        double onset = tempo.tick_to_seconds(n.on_tick, division);
        double off = tempo.tick_to_seconds(std::max(n.off_tick, n.on_tick + 1), division);
        out.score.events.push_back({onset, off - onset, n.pitch, n.velocity});
    }
    std::stable_sort(out.score.events.begin(), out.score.events.end(),
                     [](const NoteEvent& a, const NoteEvent& b) { return a.onset < b.onset; });
    return out;
}

namespace {

void put_u16(std::vector<uint8_t>& v, uint16_t x) {
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
}
void put_u32(std::vector<uint8_t>& v, uint32_t x) {
    for (int i = 3; i >= 0; --i) v.push_back(uint8_t(x >> (8 * i)));
}

} // namespace

std::vector<uint8_t> write_smf(const Score& score, int tpq) {
    if (tpq < 24 || tpq > 960) throw std::runtime_error("write_smf: ticks_per_quarter out of range");

    const double quarter_seconds = 0.5;  // fixed tempo 500000 us/quarter
    struct Ev {
        uint32_t tick;
        int order;  // note-off before note-on at equal ticks
        uint8_t status, d1, d2;
    };
    std::vector<Ev> evs;
    // overlapping notes of the same pitch go to different channels so the
    // on/off pairing stays unambiguous
    uint32_t busy_until[128][16] = {};
    for (const auto& n : score.events) {
        uint32_t on = uint32_t(std::llround(n.onset / quarter_seconds * tpq));
        uint32_t off = uint32_t(std::llround((n.onset + n.duration) / quarter_seconds * tpq));
        if (off <= on) off = on + 1;
        int ch = 0;
        for (int c = 0; c < 16; ++c)
            if (busy_until[n.pitch][c] <= on) {
                ch = c;
                break;
            }
        busy_until[n.pitch][ch] = off;
        evs.push_back({on, 1, uint8_t(0x90 | ch), uint8_t(n.pitch), uint8_t(n.velocity)});
        evs.push_back({off, 0, uint8_t(0x80 | ch), uint8_t(n.pitch), 0});
    }
    std::stable_sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
        return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
    });

    std::vector<uint8_t> track;
    // tempo meta at tick 0
    track.insert(track.end(), {0x00, 0xff, 0x51, 0x03, 0x07, 0xa1, 0x20});
    uint32_t last_tick = 0;
    for (const auto& e : evs) {
        auto delta = encode_vlq(e.tick - last_tick);
        track.insert(track.end(), delta.begin(), delta.end());
        track.push_back(e.status);
        track.push_back(e.d1);
        track.push_back(e.d2);
        last_tick = e.tick;
    }
    track.insert(track.end(), {0x00, 0xff, 0x2f, 0x00});

    std::vector<uint8_t> out;
    out.insert(out.end(), {'M', 'T', 'h', 'd'});
    put_u32(out, 6);
    put_u16(out, 0);  // format 0
    put_u16(out, 1);  // one track
    put_u16(out, uint16_t(tpq));
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    put_u32(out, uint32_t(track.size()));
    out.insert(out.end(), track.begin(), track.end());
    return out;
}

} // namespace align
