#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dae/image.hpp"

namespace dae {

enum class DatasetTag { MMM, DX, OTHER };

const char* to_string(DatasetTag t);
DatasetTag parse_dataset_tag(const std::string& s);

struct SplitSizes {
    std::size_t train_per_dataset = 300;
    std::size_t combined_test = 100;
    std::size_t combined_train_literal = 721;
};

struct ManifestEntry {
    std::filesystem::path path;
    DatasetTag tag = DatasetTag::OTHER;
};

/// Image list with dataset tags; text form is one `path<TAB>tag` line per image.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    SplitSizes sizes;

    void validate() const;
};

/// Relative paths resolve against the manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
/// Every .pgm/.png directly inside `dir` (tag OTHER) and inside MMM/ and DX/ subdirectories
/// (tagged accordingly), sorted by path.
DatasetManifest scan_directory(const std::filesystem::path& dir);

enum class SplitMode { per_dataset, combined };

struct Splits {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::string note;  // which rule produced the split
};

/// per_dataset: each tag group is shuffled and its first `train_per_dataset` images train,
/// the rest test. combined: when the corpus holds at least combined_train_literal +
/// combined_test images both counts are honoured; otherwise `combined_test` images are drawn
/// first and all remaining images train. Indices are sorted; selection depends only on seed.
Splits make_splits(const std::vector<DatasetTag>& tags, SplitMode mode, const SplitSizes& sizes,
                   std::uint64_t seed);
Splits make_splits(const DatasetManifest& manifest, SplitMode mode, std::uint64_t seed);

/// Images with their identifiers and dataset tags, all resized to a common size.
struct Corpus {
    std::vector<Image> images;
    std::vector<std::string> ids;
    std::vector<DatasetTag> tags;
    std::string source;  // directory, manifest path, or "synthetic"

    std::size_t size() const noexcept { return images.size(); }
    Corpus subset(const std::vector<std::size_t>& indices) const;
};

/// Loads and resizes every manifest entry (bilinear, to side x side).
Corpus load_corpus(const DatasetManifest& manifest, int side = 64);

enum class PhantomStyle { mammogram, radiograph, mixed };

/// Procedural 64x64 phantoms (ellipses, thin line structures, smooth gradients, texture) in
/// [0, 1]. Image i depends only on (seed, i, style).
std::vector<Image> synth_corpus(std::size_t n, std::uint64_t seed, PhantomStyle style = PhantomStyle::mixed,
                                int side = 64);

/// `mmm` mammogram-style images tagged MMM followed by `dx` radiograph-style images tagged DX.
Corpus synthetic_corpus(std::size_t mmm, std::size_t dx, std::uint64_t seed, int side = 64);

}  // namespace dae
