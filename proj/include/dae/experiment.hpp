#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dae/baselines.hpp"
#include "dae/dataset.hpp"
#include "dae/metrics.hpp"
#include "dae/network.hpp"
#include "dae/noise.hpp"
#include "dae/training.hpp"

namespace dae {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything that determines an experiment's outputs. Serialised as a versioned JSON
/// document; missing keys keep their defaults.
struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::uint64_t seed = 0;
    std::string corpus = "synthetic";  // "synthetic", an image directory, or a manifest file
    std::size_t synthetic_mmm = 322;
    std::size_t synthetic_dx = 400;
    int image_side = 64;
    std::string noise = "0";  // preset id or path to a JSON noise spec
    int filters = 32;
    int kernel = 3;
    TrainConfig train;
    SsimConfig ssim;
    NlMeansConfig nl_means;
    int median_k = 3;
    SplitSizes splits;
    int montage_images = 6;
    std::filesystem::path out = "results";

    void validate() const;
    Architecture architecture() const { return default_architecture(filters, kernel); }
};

std::string config_to_json(const ExperimentConfig& cfg);
/// Throws ConfigError on syntax errors, unknown keys, or an unsupported schema version.
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// FNV-1a 64 of the canonical JSON form without the output directory, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

std::string noise_to_json(const NoiseSpec& spec);
/// A preset id ("0".."5", "sd10") or the path of a JSON noise spec file.
NoiseSpec resolve_noise(const std::string& id_or_path);

/// Independent seed for one purpose of an experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

/// The experiment's images: the synthetic corpus or every image found at `cfg.corpus`.
Corpus load_experiment_corpus(const ExperimentConfig& cfg);

// --- evaluation --------------------------------------------------------------------

struct ResultRow {
    std::string image_id;
    std::string method;
    std::string noise_id;
    double ssim = 0.0;
    double psnr = 0.0;
};

struct MethodMean {
    std::string method;
    std::string noise_id;
    std::size_t count = 0;
    double mean_ssim = 0.0;
    double mean_psnr = 0.0;
};

struct Candidate {
    std::string method;
    std::vector<Image> images;
};

/// One row per (candidate, image), candidates in the given order. Throws DataError when a
/// candidate's image count differs from the clean set or ShapeError on mismatched sizes.
std::vector<ResultRow> evaluate_candidates(const std::vector<Image>& clean, const std::vector<std::string>& ids,
                                           const std::vector<Candidate>& candidates, const std::string& noise_id,
                                           const SsimConfig& ssim);
/// Means per (method, noise id) in first-appearance order.
std::vector<MethodMean> method_means(const std::vector<ResultRow>& rows);
/// Mean SSIM of the rows matching `method` (and `noise_id` when non-empty) whose image id
/// starts with `id_prefix`. Throws DataError when nothing matches.
double mean_ssim_of(const std::vector<ResultRow>& rows, const std::string& method, const std::string& noise_id = {},
                    const std::string& id_prefix = {});

/// CSVs start with a `# config_hash=... seed=...` comment; reals use %.17g.
std::string per_image_csv(const std::vector<ResultRow>& rows, const std::string& header_comment);
std::string means_csv(const std::vector<MethodMean>& means, const std::string& header_comment);
std::vector<ResultRow> parse_per_image_csv(std::string_view text);
std::string report_header(const ExperimentConfig& cfg);

void write_text_file(const std::filesystem::path& path, std::string_view text);

// --- pipeline ----------------------------------------------------------------------

using ProgressFn = std::function<void(const std::string&)>;

struct Condition {
    std::string label;  // also the artifact subdirectory name
    NoiseSpec noise;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::string dae_method = "cnn_dae";
    bool baselines = true;
};

struct ConditionOutcome {
    std::vector<ResultRow> rows;
    TrainHistory history;
    NetworkParams params;
};

/// Corrupts the whole corpus, trains on the condition's training images, and scores the
/// noisy input, the baselines (when enabled) and the trained model on its test images.
/// Writes the checkpoint, loss history CSV, loss SVG and a montage under `dir/label`.
ConditionOutcome run_condition(const Corpus& corpus, const Condition& condition, const ExperimentConfig& cfg,
                               const std::filesystem::path& dir, const ProgressFn& progress = {});

struct TableCell {
    std::string row;
    std::string column;
    double measured = 0.0;
    std::optional<double> reference;
};

struct TableReport {
    int table = 0;
    std::vector<TableCell> cells;
    std::vector<ResultRow> rows;
    std::vector<std::string> notes;
    std::vector<std::string> conditions;
    std::vector<TrainHistory> histories;  // parallel to `conditions`

    /// Throws DataError when the cell does not exist.
    double measured(const std::string& row, const std::string& column) const;
};

/// Runs every condition of table 2, 3 or 4 and writes `cfg.out/tableN/`: tableN.csv,
/// per_image.csv, means.csv (all deterministic) and metadata.json (timings, notes).
TableReport reproduce_table(int table, const ExperimentConfig& cfg, const ProgressFn& progress = {});

std::string table_csv(const TableReport& report, const std::string& header_comment);

}  // namespace dae
