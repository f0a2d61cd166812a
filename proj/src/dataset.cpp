#include "align/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;

namespace align {

std::vector<uint8_t> read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const void* data, size_t size) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f.write(static_cast<const char*>(data), std::streamsize(size));
}

void write_file(const fs::path& p, const std::string& text) {
    write_file(p, text.data(), text.size());
}
void write_file(const fs::path& p, const std::vector<uint8_t>& bytes) {
    write_file(p, bytes.data(), bytes.size());
}

void write_piece(const fs::path& dir, const SyntheticPair& pair) {
    fs::create_directories(dir);
    write_file(dir / "score.mid", write_smf(pair.score, 480));
    write_file(dir / "score.wav", wav_write(pair.score_audio));
    write_file(dir / "perf.wav", wav_write(pair.perf_audio));

    std::ostringstream gt;
    gt << "score_time_s,perf_time_s\n";
    char line[64];
    for (const auto& [ts, tp] : pair.gt.map) {
        std::snprintf(line, sizeof(line), "%.6f,%.6f\n", ts, tp);
        gt << line;
    }
    write_file(dir / "gt.csv", gt.str());

    nlohmann::ordered_json meta;
    meta["seed"] = pair.seed;
    meta["difficulty"] = difficulty_to_string(pair.difficulty);
    meta["snr_db"] = pair.snr_db;
    auto knots = nlohmann::ordered_json::array();
    for (const auto& [t, f] : pair.curve.knots) knots.push_back({t, f});
    meta["tempo_knots"] = knots;
    write_file(dir / "meta.json", meta.dump(2) + "\n");
}

LoadedPiece load_piece(const fs::path& dir) {
    LoadedPiece p;
    p.id = dir.filename().string();
    p.score = parse_smf(read_file(dir / "score.mid")).score;
    p.score_audio = wav_read(read_file(dir / "score.wav"));
    p.perf_audio = wav_read(read_file(dir / "perf.wav"));

    auto gt_bytes = read_file(dir / "gt.csv");
    std::istringstream ss(std::string(gt_bytes.begin(), gt_bytes.end()));
    std::string line;
    std::getline(ss, line);  // header
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        size_t comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("bad gt.csv line: " + line);
        p.gt.map.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    }
    return p;
}

std::vector<fs::path> list_pieces(const fs::path& root) {
    std::vector<fs::path> out;
    if (!fs::is_directory(root)) throw std::runtime_error("not a directory: " + root.string());
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && fs::exists(e.path() / "meta.json")) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace align
