// Command-line front end: dataset generation, training, alignment,
// evaluation, and plot export.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "align/dataeval.hpp"
#include "align/dataset.hpp"
#include "align/dtw.hpp"
#include "align/net.hpp"
#include "align/signal.hpp"
#include "align/simmatrix.hpp"

namespace fs = std::filesystem;
using namespace align;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kContext = 15;

void append_run_record(const fs::path& out_dir, const std::string& line) {
    fs::create_directories(out_dir);
    std::ofstream f(out_dir / "run_log.txt", std::ios::app);
    f << line << " version=" << kVersion << "\n";
}

Spectrogram make_spec(const AudioBuffer& buf, const std::string& transform) {
    if (transform == "stft") return stft(buf);
    return cqt(buf);
}

struct AlignOutput {
    SimilarityMatrix matrix;  // the matrix the path was computed on
    SimilarityMatrix distances;
    WarpPath path;
};

AlignOutput align_audio(const NetworkParams& params, const AudioBuffer& score_audio,
                        const AudioBuffer& perf_audio, const std::string& transform,
                        const std::string& mode, const std::string& dtw_kind, int radius,
                        double threshold) {
    auto score_spec = make_spec(score_audio, transform);
    auto perf_spec = make_spec(perf_audio, transform);
    AlignOutput out;
    out.distances = distance_matrix(params, score_spec, perf_spec, kContext);
    out.matrix = (mode == "binary") ? binarize(out.distances, threshold) : out.distances;
    out.path = (dtw_kind == "exact") ? dtw_exact(out.matrix) : fastdtw(out.matrix, radius);
    return out;
}

NetworkParams load_model_file(const fs::path& path, const std::string& transform) {
    if (!fs::exists(path))
        throw std::runtime_error("model file not found: " + path.string());
    int bins = (transform == "stft") ? 513 : 84;
    return load_params(read_file(path), kContext, bins);
}

int cmd_gen_data(const fs::path& out_dir, uint64_t seed, int count, const std::string& difficulty,
                 double length_s) {
    auto diff = difficulty_from_string(difficulty);
    fs::create_directories(out_dir);
    for (int i = 0; i < count; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "piece_%04d", i);
        auto pair = make_pair(seed + uint64_t(i), diff, length_s);
        write_piece(out_dir / id, pair);
    }
    return 0;
}

int cmd_train(const fs::path& data_dir, const fs::path& model_path, const fs::path& out_dir,
              const std::string& transform, uint64_t seed, int epochs, int n_pairs,
              double learning_rate, double margin, int batch_size) {
    auto piece_dirs = list_pieces(data_dir);
    if (piece_dirs.empty()) throw std::runtime_error("no pieces under " + data_dir.string());

    std::vector<LoadedPiece> pieces;
    std::vector<Spectrogram> score_specs, perf_specs;
    for (const auto& dir : piece_dirs) pieces.push_back(load_piece(dir));
    for (const auto& p : pieces) {
        score_specs.push_back(make_spec(p.score_audio, transform));
        perf_specs.push_back(make_spec(p.perf_audio, transform));
    }
    std::vector<AlignedSpecs> data;
    for (size_t i = 0; i < pieces.size(); ++i)
        data.push_back({&score_specs[i], &perf_specs[i], &pieces[i].gt});

    auto pairs = sample_pairs(data, n_pairs, seed, kContext);

    NetConfig netcfg;
    netcfg.input_h = kContext;
    netcfg.input_w = score_specs[0].bins;
    TrainConfig tc;
    tc.rng_seed = seed;
    tc.epochs = epochs;
    tc.learning_rate = learning_rate;
    tc.margin = margin;
    tc.batch_size = batch_size;
    auto res = train(tc, netcfg, pairs);

    if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
    write_file(model_path, save_params(res.params));

    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "epoch,mean_loss\n";
    char line[64];
    for (size_t e = 0; e < res.epoch_loss.size(); ++e) {
        std::snprintf(line, sizeof(line), "%zu,%.8f\n", e, res.epoch_loss[e]);
        csv << line;
    }
    write_file(out_dir / "train_loss.csv", csv.str());
    return 0;
}

int cmd_align(const fs::path& score_path, const fs::path& perf_path, const fs::path& model_path,
              const fs::path& out_dir, const std::string& transform, const std::string& mode,
              const std::string& dtw_kind, int radius, double threshold) {
    auto params = load_model_file(model_path, transform);
    if (!fs::exists(score_path))
        throw std::runtime_error("score file not found: " + score_path.string());
    if (!fs::exists(perf_path))
        throw std::runtime_error("performance file not found: " + perf_path.string());

    auto score = parse_smf(read_file(score_path)).score;
    auto score_audio = render(score, Timbre::piano_default());
    auto perf_audio = wav_read(read_file(perf_path));

    auto out = align_audio(params, score_audio, perf_audio, transform, mode, dtw_kind, radius,
                           threshold);

    fs::create_directories(out_dir);
    write_file(out_dir / "path.csv", path_to_csv(out.path));

    auto timemap = path_to_timemap(out.path, 512, score_audio.sample_rate);
    std::ostringstream tm;
    tm << "score_time_s,perf_time_s\n";
    char line[64];
    double hop_s = 512.0 / score_audio.sample_rate;
    for (size_t i = 0; i < timemap.size(); ++i) {
        std::snprintf(line, sizeof(line), "%.6f,%.6f\n", i * hop_s, timemap[i]);
        tm << line;
    }
    write_file(out_dir / "timemap.csv", tm.str());
    return 0;
}

int cmd_eval(const fs::path& data_dir, const fs::path& model_stft, const fs::path& model_cqt,
             const fs::path& out_dir, const std::string& dtw_kind, int radius, double threshold,
             double tolerance) {
    auto piece_dirs = list_pieces(data_dir);
    if (piece_dirs.empty()) throw std::runtime_error("no pieces under " + data_dir.string());

    const std::vector<std::string> transforms = {"stft", "cqt"};
    const std::vector<std::string> modes = {"binary", "distance"};
    std::map<std::string, NetworkParams> models;
    models.emplace("stft", load_model_file(model_stft, "stft"));
    models.emplace("cqt", load_model_file(model_cqt, "cqt"));

    std::ostringstream csv;
    csv << "piece,mode,transform,accuracy_pct\n";
    std::map<std::pair<std::string, std::string>, double> grid_sum;
    char line[160];

    for (const auto& dir : piece_dirs) {
        auto piece = load_piece(dir);
        for (const auto& transform : transforms) {
            auto score_spec = make_spec(piece.score_audio, transform);
            auto perf_spec = make_spec(piece.perf_audio, transform);
            auto dist = distance_matrix(models.at(transform), score_spec, perf_spec, kContext);
            for (const auto& mode : modes) {
                SimilarityMatrix m = (mode == "binary") ? binarize(dist, threshold) : dist;
                WarpPath path = (dtw_kind == "exact") ? dtw_exact(m) : fastdtw(m, radius);
                double acc = accuracy(path, piece.gt, 512, piece.score_audio.sample_rate,
                                      tolerance);
                grid_sum[{mode, transform}] += acc;
                std::snprintf(line, sizeof(line), "%s,%s,%s,%.2f\n", piece.id.c_str(),
                              mode.c_str(), transform.c_str(), acc);
                csv << line;
            }
        }
    }

    fs::create_directories(out_dir);
    write_file(out_dir / "report.csv", csv.str());

    double n = double(piece_dirs.size());
    std::ostringstream table;
    table << "Alignment accuracy (%), tolerance " << tolerance << " s, " << int(n)
          << " pieces\n\n";
    table << "mode        stft     cqt\n";
    for (const auto& mode : modes) {
        std::snprintf(line, sizeof(line), "%-10s %6.1f  %6.1f\n", mode.c_str(),
                      grid_sum[{mode, "stft"}] / n, grid_sum[{mode, "cqt"}] / n);
        table << line;
    }
    write_file(out_dir / "report.txt", table.str());
    std::cout << table.str();
    return 0;
}

int cmd_plot(const fs::path& score_path, const fs::path& perf_path, const fs::path& model_path,
             const fs::path& out_dir, const std::string& transform, const std::string& mode,
             const std::string& dtw_kind, int radius, double threshold) {
    auto params = load_model_file(model_path, transform);
    auto score = parse_smf(read_file(score_path)).score;
    auto score_audio = render(score, Timbre::piano_default());
    auto perf_audio = wav_read(read_file(perf_path));

    auto score_spec = make_spec(score_audio, transform);
    auto perf_spec = make_spec(perf_audio, transform);
    auto out = align_audio(params, score_audio, perf_audio, transform, mode, dtw_kind, radius,
                           threshold);

    fs::create_directories(out_dir);
    write_file(out_dir / "score_spec.pgm", spectrogram_to_pgm(score_spec));
    write_file(out_dir / "perf_spec.pgm", spectrogram_to_pgm(perf_spec));
    write_file(out_dir / "simmatrix.pgm",
               matrix_to_pgm(out.matrix.data, out.matrix.rows, out.matrix.cols));
    write_file(out_dir / "path_overlay.pgm", path_overlay_pgm(out.matrix, out.path));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Audio-to-score alignment with a Siamese spectrogram embedding"};
    app.require_subcommand(1);

    std::string transform = "cqt", mode = "distance", dtw_kind = "fast", difficulty = "medium";
    int radius = 10, count = 10, epochs = 10, n_pairs = 2000, batch_size = 32;
    double threshold = 0.5, tolerance = 0.1, length_s = 30.0, learning_rate = 1e-3, margin = 1.0;
    uint64_t seed = 1;
    fs::path out_dir = ".", data_dir, model_path, model_stft, model_cqt, score_path, perf_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "RNG seed");
    };

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic aligned dataset");
    add_common(gen);
    gen->add_option("--count", count, "number of pieces");
    gen->add_option("--difficulty", difficulty, "easy|medium|hard")
        ->check(CLI::IsMember({"easy", "medium", "hard"}));
    gen->add_option("--length", length_s, "approximate piece length, seconds");

    auto* tr = app.add_subcommand("train", "train the embedding network");
    add_common(tr);
    tr->add_option("--data", data_dir, "dataset root")->required();
    tr->add_option("--model", model_path, "output model file")->required();
    tr->add_option("--transform", transform, "stft|cqt")
        ->check(CLI::IsMember({"stft", "cqt"}));
    tr->add_option("--epochs", epochs, "training epochs");
    tr->add_option("--pairs", n_pairs, "training pairs to sample");
    tr->add_option("--batch", batch_size, "minibatch size");
    tr->add_option("--lr", learning_rate, "learning rate");
    tr->add_option("--margin", margin, "contrastive margin");

    auto* al = app.add_subcommand("align", "align a performance WAV to a MIDI score");
    add_common(al);
    al->add_option("--score", score_path, "score MIDI file")->required();
    al->add_option("--perf", perf_path, "performance WAV file")->required();
    al->add_option("--model", model_path, "model file")->required();
    al->add_option("--transform", transform, "stft|cqt")
        ->check(CLI::IsMember({"stft", "cqt"}));
    al->add_option("--mode", mode, "distance|binary")
        ->check(CLI::IsMember({"distance", "binary"}));
    al->add_option("--dtw", dtw_kind, "exact|fast")->check(CLI::IsMember({"exact", "fast"}));
    al->add_option("--radius", radius, "fastdtw radius");
    al->add_option("--threshold", threshold, "binarization threshold");

    auto* ev = app.add_subcommand("eval", "evaluate the 2x2 mode x transform grid on a dataset");
    add_common(ev);
    ev->add_option("--data", data_dir, "dataset root")->required();
    ev->add_option("--model-stft", model_stft, "model trained on STFT input")->required();
    ev->add_option("--model-cqt", model_cqt, "model trained on CQT input")->required();
    ev->add_option("--dtw", dtw_kind, "exact|fast")->check(CLI::IsMember({"exact", "fast"}));
    ev->add_option("--radius", radius, "fastdtw radius");
    ev->add_option("--threshold", threshold, "binarization threshold");
    ev->add_option("--tolerance", tolerance, "accuracy tolerance, seconds");

    auto* pl = app.add_subcommand("plot", "export spectrogram/matrix/path PGM images");
    add_common(pl);
    pl->add_option("--score", score_path, "score MIDI file")->required();
    pl->add_option("--perf", perf_path, "performance WAV file")->required();
    pl->add_option("--model", model_path, "model file")->required();
    pl->add_option("--transform", transform, "stft|cqt")
        ->check(CLI::IsMember({"stft", "cqt"}));
    pl->add_option("--mode", mode, "distance|binary")
        ->check(CLI::IsMember({"distance", "binary"}));
    pl->add_option("--dtw", dtw_kind, "exact|fast")->check(CLI::IsMember({"exact", "fast"}));
    pl->add_option("--radius", radius, "fastdtw radius");
    pl->add_option("--threshold", threshold, "binarization threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::ostringstream record;
        for (int i = 0; i < argc; ++i) record << (i ? " " : "") << argv[i];
        append_run_record(out_dir, record.str());

        if (gen->parsed())
            return cmd_gen_data(out_dir, seed, count, difficulty, length_s);
        if (tr->parsed())
            return cmd_train(data_dir, model_path, out_dir, transform, seed, epochs, n_pairs,
                             learning_rate, margin, batch_size);
        if (al->parsed())
            return cmd_align(score_path, perf_path, model_path, out_dir, transform, mode,
                             dtw_kind, radius, threshold);
        if (ev->parsed())
            return cmd_eval(data_dir, model_stft, model_cqt, out_dir, dtw_kind, radius, threshold,
                            tolerance);
        if (pl->parsed())
            return cmd_plot(score_path, perf_path, model_path, out_dir, transform, mode, dtw_kind,
                            radius, threshold);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
