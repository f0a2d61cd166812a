#ifndef ALIGN_DATASET_HPP
#define ALIGN_DATASET_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "align/dataeval.hpp"

namespace align {

// On-disk piece layout: <root>/<piece_id>/{score.mid, score.wav, perf.wav,
// gt.csv, meta.json}

void write_piece(const std::filesystem::path& dir, const SyntheticPair& pair);

struct LoadedPiece {
    std::string id;
    Score score;
    AudioBuffer score_audio;
    AudioBuffer perf_audio;
    GroundTruth gt;
};

LoadedPiece load_piece(const std::filesystem::path& dir);

// piece subdirectories of a dataset root, sorted by id
std::vector<std::filesystem::path> list_pieces(const std::filesystem::path& root);

std::vector<uint8_t> read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const void* data, size_t size);
void write_file(const std::filesystem::path& p, const std::string& text);
void write_file(const std::filesystem::path& p, const std::vector<uint8_t>& bytes);

} // namespace align

#endif
