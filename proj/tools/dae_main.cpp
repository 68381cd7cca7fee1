// Command-line front end: corrupt, train, denoise, evaluate, reproduce.

#include <CLI11.hpp>
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dae/checkpoint.hpp"
#include "dae/error.hpp"
#include "dae/experiment.hpp"
#include "dae/plot.hpp"

namespace fs = std::filesystem;
using namespace dae;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, corpus, noise, loss, ssim_window;
    std::optional<int> epochs, batch_size;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);
        app->add_option("--seed", seed, "Master seed");
        app->add_option("--out", out, "Output directory");
        app->add_option("--corpus", corpus, "'synthetic', an image directory, or a manifest file");
        app->add_option("--noise", noise, "Noise preset id (0-5, sd10) or JSON noise spec file");
        app->add_option("--epochs", epochs, "Training epochs");
        app->add_option("--batch-size", batch_size, "Mini-batch size");
        app->add_option("--loss", loss, "Training loss")->check(CLI::IsMember({"bce", "mse"}));
        app->add_option("--ssim-window", ssim_window, "SSIM window: 'global' or a side length");
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
        if (seed) cfg.seed = *seed;
        if (out) cfg.out = *out;
        if (corpus) cfg.corpus = *corpus;
        if (noise) cfg.noise = *noise;
        if (epochs) cfg.train.epochs = *epochs;
        if (batch_size) cfg.train.batch_size = *batch_size;
        if (loss) cfg.train.loss = parse_loss_kind(*loss);
        if (ssim_window) {
            if (*ssim_window == "global") {
                cfg.ssim.window = 0;
            } else {
                try {
                    std::size_t used = 0;
                    cfg.ssim.window = std::stoi(*ssim_window, &used);
                    if (used != ssim_window->size()) throw std::invalid_argument("trailing characters");
                } catch (const std::exception&) {
                    throw ConfigError("--ssim-window must be 'global' or an integer, got '" + *ssim_window + "'");
                }
            }
        }
        cfg.validate();
        return cfg;
    }
};

void log(const std::string& msg) { std::cerr << msg << '\n'; }

// Image files directly inside `dir`, sorted by name.
std::vector<fs::path> image_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".pgm" || ext == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

fs::path output_name(const fs::path& dir, const std::string& stem, const std::string& format) {
    return dir / (stem + (format == "png" ? ".png" : ".pgm"));
}

void save_output(const Image& img, const fs::path& path, const std::string& format) {
    if (format == "png") save_png(img, path);
    else save_pgm(img, path, 65535);
}

// --- corrupt ---------------------------------------------------------------------------

int cmd_corrupt(const CommonOptions& common, const std::string& format) {
    const ExperimentConfig cfg = common.resolve();
    const NoiseSpec noise = resolve_noise(cfg.noise);
    const fs::path out = cfg.out;
    fs::create_directories(out / "noisy");

    std::vector<std::pair<std::string, Image>> clean;  // (id, image) at native resolution
    std::vector<DatasetTag> tags;
    if (cfg.corpus == "synthetic") {
        const Corpus c = load_experiment_corpus(cfg);
        fs::create_directories(out / "clean");
        for (std::size_t i = 0; i < c.size(); ++i) {
            clean.emplace_back(c.ids[i], c.images[i]);
            tags.push_back(c.tags[i]);
            save_output(c.images[i], output_name(out / "clean", c.ids[i], format), format);
        }
    } else {
        const fs::path p = cfg.corpus;
        const DatasetManifest m = fs::is_directory(p) ? scan_directory(p) : read_manifest(p);
        for (const ManifestEntry& e : m.entries) {
            clean.emplace_back(e.path.stem().string(), load_grayscale(e.path));
            tags.push_back(e.tag);
        }
    }
    if (clean.empty()) throw DataError("no images found in '" + cfg.corpus + "'");

    DatasetManifest manifest;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const auto& [id, img] = clean[i];
        const Tensor noisy = corrupt(stack(std::span(&img, 1)), noise, derive_seed(cfg.seed, "corrupt:" + id));
        const fs::path file = output_name(out / "noisy", id, format);
        save_output(image_at(noisy, 0), file, format);
        manifest.entries.push_back({fs::relative(file, out), tags[i]});
    }
    write_manifest(manifest, out / "manifest.txt");
    nlohmann::ordered_json prov;
    prov["source"] = cfg.corpus;
    prov["seed"] = cfg.seed;
    prov["noise_id"] = noise.id();
    prov["noise"] = nlohmann::ordered_json::parse(noise_to_json(noise));
    prov["config_hash"] = config_hash(cfg);
    write_text_file(out / "provenance.json", prov.dump(2) + "\n");
    log("wrote " + std::to_string(clean.size()) + " corrupted images to " + (out / "noisy").string());
    return kOk;
}

// --- train -----------------------------------------------------------------------------

int cmd_train(const CommonOptions& common, const std::string& split_mode, const std::string& dataset) {
    const ExperimentConfig cfg = common.resolve();
    const NoiseSpec noise = resolve_noise(cfg.noise);
    const Corpus corpus = load_experiment_corpus(cfg);
    const Splits splits = make_splits(corpus.tags, split_mode == "combined" ? SplitMode::combined : SplitMode::per_dataset,
                                      cfg.splits, derive_seed(cfg.seed, "split"));
    std::vector<std::size_t> train_idx, test_idx;
    auto keep = [&](std::size_t i) { return dataset == "all" || to_string(corpus.tags[i]) == dataset; };
    std::copy_if(splits.train.begin(), splits.train.end(), std::back_inserter(train_idx), keep);
    std::copy_if(splits.test.begin(), splits.test.end(), std::back_inserter(test_idx), keep);
    if (train_idx.empty()) throw DataError("no training images for dataset '" + dataset + "'");
    log(splits.note);

    const fs::path out = cfg.out;
    fs::create_directories(out);
    const Architecture arch = cfg.architecture();
    const Tensor clean = stack(corpus.images);
    const Tensor noisy = corrupt(clean, noise, derive_seed(cfg.seed, "noise:" + noise.id()));
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train:" + dataset);
    log("training on " + std::to_string(train_idx.size()) + " images (" + noise.id() + ")");
    const TrainResult res = train(noisy.gather_batch(train_idx), clean.gather_batch(train_idx), arch, tc,
                                  [&](int epoch, const TrainHistory& h) {
                                      char buf[96];
                                      std::snprintf(buf, sizeof buf, "epoch %d/%d train %.6f val %.6f", epoch,
                                                    tc.epochs, h.train_loss.back(), h.validation_loss.back());
                                      log(buf);
                                  });
    save_checkpoint(res.params, arch, out / "model.ckpt");
    write_history_csv(res.history, out / "history.csv");
    write_loss_svg(res.history, "Training and validation loss", out / "loss.svg");
    std::string split_txt = "# " + splits.note + "\nimage_id,role\n";
    for (std::size_t i : train_idx) split_txt += corpus.ids[i] + ",train\n";
    for (std::size_t i : test_idx) split_txt += corpus.ids[i] + ",test\n";
    write_text_file(out / "split.csv", split_txt);
    write_text_file(out / "config.json", config_to_json(cfg));
    log("wrote " + (out / "model.ckpt").string());
    return kOk;
}

// --- denoise ---------------------------------------------------------------------------

int cmd_denoise(const CommonOptions& common, const std::string& checkpoint, const std::vector<std::string>& inputs,
                const std::string& format) {
    const ExperimentConfig cfg = common.resolve();
    const ModelCheckpoint model = load_checkpoint(checkpoint);
    std::vector<fs::path> files;
    for (const std::string& in : inputs) {
        if (fs::is_directory(in)) {
            const auto found = image_files(in);
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.emplace_back(in);
        }
    }
    if (files.empty()) throw DataError("no input images");
    const fs::path out = cfg.out;
    fs::create_directories(out);
    for (const fs::path& f : files) {
        const Image img = load_grayscale(f);
        const Image den = image_at(predict(model.params, model.arch, stack(std::span(&img, 1))), 0);
        save_output(den, output_name(out, f.stem().string(), format), format);
    }
    log("denoised " + std::to_string(files.size()) + " images into " + out.string());
    return kOk;
}

// --- evaluate --------------------------------------------------------------------------

int cmd_evaluate(const CommonOptions& common, const std::string& clean_dir, const std::vector<std::string>& methods,
                 const std::string& noise_label) {
    const ExperimentConfig cfg = common.resolve();
    const auto clean_files = image_files(clean_dir);
    if (clean_files.empty()) throw DataError("no clean images in " + clean_dir);
    std::vector<Image> clean;
    std::vector<std::string> ids;
    for (const fs::path& f : clean_files) {
        clean.push_back(load_grayscale(f));
        ids.push_back(f.stem().string());
    }
    std::vector<Candidate> cands;
    for (const std::string& spec : methods) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--method expects name=directory, got '" + spec + "'");
        Candidate c{spec.substr(0, eq), {}};
        const fs::path dir = spec.substr(eq + 1);
        std::map<std::string, fs::path> by_stem;
        for (const fs::path& f : image_files(dir)) by_stem[f.stem().string()] = f;
        if (by_stem.size() != ids.size())
            throw DataError("method '" + c.method + "' has " + std::to_string(by_stem.size()) + " images but the clean set has " +
                            std::to_string(ids.size()));
        for (const std::string& id : ids) {
            const auto it = by_stem.find(id);
            if (it == by_stem.end()) throw DataError("method '" + c.method + "' has no image named '" + id + "'");
            c.images.push_back(load_grayscale(it->second));
        }
        cands.push_back(std::move(c));
    }
    if (cands.empty()) throw ConfigError("evaluate needs at least one --method name=directory");
    const std::string noise_id = noise_label.empty() ? resolve_noise(cfg.noise).id() : noise_label;
    const auto rows = evaluate_candidates(clean, ids, cands, noise_id, cfg.ssim);
    const auto means = method_means(rows);
    const std::string header = report_header(cfg);
    const fs::path out = cfg.out;
    write_text_file(out / "per_image.csv", per_image_csv(rows, header));
    write_text_file(out / "means.csv", means_csv(means, header));
    const std::size_t shown = std::min<std::size_t>(static_cast<std::size_t>(cfg.montage_images), clean.size());
    if (shown > 0) {
        std::vector<std::vector<Image>> grid{{clean.begin(), clean.begin() + static_cast<std::ptrdiff_t>(shown)}};
        for (const Candidate& c : cands) grid.emplace_back(c.images.begin(), c.images.begin() + static_cast<std::ptrdiff_t>(shown));
        save_png(montage(grid), out / "montage.png");
    }
    for (const MethodMean& m : means) std::printf("%-12s mean SSIM %.4f  mean PSNR %.2f dB  (n=%zu)\n", m.method.c_str(), m.mean_ssim, m.mean_psnr, m.count);
    return kOk;
}

// --- reproduce -------------------------------------------------------------------------

int cmd_reproduce(const CommonOptions& common, int table) {
    const ExperimentConfig cfg = common.resolve();
    const TableReport report = reproduce_table(table, cfg, log);
    std::printf("Table %d (%s corpus)\n", table, cfg.corpus.c_str());
    std::printf("%-16s %-18s %10s %10s\n", "row", "column", "measured", "reference");
    for (const TableCell& c : report.cells) {
        char reference[16] = "-";
        if (c.reference) std::snprintf(reference, sizeof reference, "%.2f", *c.reference);
        std::printf("%-16s %-18s %10.4f %10s\n", c.row.c_str(), c.column.c_str(), c.measured, reference);
    }
    for (const std::string& n : report.notes) std::printf("note: %s\n", n.c_str());
    std::printf("artifacts: %s\n", (cfg.out / ("table" + std::to_string(table))).string().c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convolutional denoising autoencoder for medical images"};
    app.require_subcommand(1);

    CommonOptions corrupt_opts, train_opts, denoise_opts, evaluate_opts, reproduce_opts;
    std::string format = "pgm", split_mode = "per_dataset", dataset = "all", checkpoint, clean_dir, noise_label;
    std::vector<std::string> inputs, methods;
    int table = 0;

    auto* corrupt_cmd = app.add_subcommand("corrupt", "Write corrupted copies of a corpus with a provenance file");
    corrupt_opts.attach(corrupt_cmd);
    corrupt_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"pgm", "png"}));

    auto* train_cmd = app.add_subcommand("train", "Train the autoencoder on (corrupted, clean) pairs");
    train_opts.attach(train_cmd);
    train_cmd->add_option("--split", split_mode, "Split rule")->check(CLI::IsMember({"per_dataset", "combined"}));
    train_cmd->add_option("--dataset", dataset, "Restrict to one dataset tag")->check(CLI::IsMember({"all", "MMM", "DX", "OTHER"}));

    auto* denoise_cmd = app.add_subcommand("denoise", "Run a trained checkpoint over images");
    denoise_opts.attach(denoise_cmd);
    denoise_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
    denoise_cmd->add_option("inputs", inputs, "Image files or directories")->required();
    denoise_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"pgm", "png"}));

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score denoised sets against the clean set");
    evaluate_opts.attach(evaluate_cmd);
    evaluate_cmd->add_option("--clean", clean_dir, "Directory of clean images")->required();
    evaluate_cmd->add_option("--method", methods, "name=directory, repeatable (e.g. noisy=dir)")->required();
    evaluate_cmd->add_option("--noise-id", noise_label, "Label for the noise column (default: from --noise)");

    auto* reproduce_cmd = app.add_subcommand("reproduce", "Run every condition of a results table");
    reproduce_opts.attach(reproduce_cmd);
    reproduce_cmd->add_option("--table", table, "Table number")->required()->check(CLI::IsMember({2, 3, 4}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*corrupt_cmd) return cmd_corrupt(corrupt_opts, format);
        if (*train_cmd) return cmd_train(train_opts, split_mode, dataset);
        if (*denoise_cmd) return cmd_denoise(denoise_opts, checkpoint, inputs, format);
        if (*evaluate_cmd) return cmd_evaluate(evaluate_opts, clean_dir, methods, noise_label);
        if (*reproduce_cmd) return cmd_reproduce(reproduce_opts, table);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const ShapeError& e) {
        std::cerr << "shape error (" << e.dimension() << "): " << e.what() << '\n';
        return kData;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kInternal;
}
