#include "dae/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "dae/error.hpp"
#include "dae/rng.hpp"

namespace dae {

const char* to_string(DatasetTag t) {
    switch (t) {
        case DatasetTag::MMM: return "MMM";
        case DatasetTag::DX: return "DX";
        case DatasetTag::OTHER: return "OTHER";
    }
    return "OTHER";
}

DatasetTag parse_dataset_tag(const std::string& s) {
    if (s == "MMM") return DatasetTag::MMM;
    if (s == "DX") return DatasetTag::DX;
    if (s == "OTHER") return DatasetTag::OTHER;
    throw DataError("unknown dataset tag '" + s + "' (expected MMM, DX or OTHER)");
}

void DatasetManifest::validate() const {
    std::set<std::filesystem::path> seen;
    for (const auto& e : entries)
        if (!seen.insert(e.path.lexically_normal()).second)
            throw DataError("manifest lists " + e.path.string() + " more than once");
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    DatasetManifest m;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        ManifestEntry e;
        e.path = line.substr(0, tab);
        if (tab != std::string::npos) {
            try {
                e.tag = parse_dataset_tag(line.substr(tab + 1));
            } catch (const DataError& err) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + err.what());
            }
        }
        if (e.path.is_relative()) e.path = path.parent_path() / e.path;
        m.entries.push_back(std::move(e));
    }
    m.validate();
    return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest " + path.string());
    for (const auto& e : m.entries) out << e.path.generic_string() << '\t' << to_string(e.tag) << '\n';
}

DatasetManifest scan_directory(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
    auto is_image = [](const fs::path& p) {
        auto ext = p.extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        return ext == ".pgm" || ext == ".png";
    };
    auto collect = [&](const fs::path& d, DatasetTag tag, DatasetManifest& m) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(d))
            if (e.is_regular_file() && is_image(e.path())) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (auto& f : files) m.entries.push_back({f, tag});
    };
    DatasetManifest m;
    if (fs::is_directory(dir / "MMM")) collect(dir / "MMM", DatasetTag::MMM, m);
    if (fs::is_directory(dir / "DX")) collect(dir / "DX", DatasetTag::DX, m);
    collect(dir, DatasetTag::OTHER, m);
    if (m.entries.empty()) throw DataError("no .pgm or .png images found in " + dir.string());
    return m;
}

Splits make_splits(const std::vector<DatasetTag>& tags, SplitMode mode, const SplitSizes& sizes,
                   std::uint64_t seed) {
    Splits s;
    if (mode == SplitMode::per_dataset) {
        std::map<DatasetTag, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < tags.size(); ++i) groups[tags[i]].push_back(i);
        for (auto& [tag, members] : groups) {
            if (members.size() < sizes.train_per_dataset)
                throw DataError(std::string("dataset ") + to_string(tag) + " needs " +
                                std::to_string(sizes.train_per_dataset) + " training images, only " +
                                std::to_string(members.size()) + " available");
            RandomStream rng(seed, 0x53504C00u + static_cast<std::uint64_t>(tag));  // "SPL"
            shuffle(members, rng);
            s.train.insert(s.train.end(), members.begin(),
                           members.begin() + static_cast<std::ptrdiff_t>(sizes.train_per_dataset));
            s.test.insert(s.test.end(), members.begin() + static_cast<std::ptrdiff_t>(sizes.train_per_dataset),
                          members.end());
        }
        s.note = "per_dataset: " + std::to_string(sizes.train_per_dataset) + " train per dataset, remainder test";
    } else {
        const std::size_t n = tags.size();
        if (n <= sizes.combined_test)
            throw DataError("combined split needs more than " + std::to_string(sizes.combined_test) +
                            " images, only " + std::to_string(n) + " available");
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        RandomStream rng(seed, 0x434F4D42u);  // "COMB"
        shuffle(order, rng);
        const auto test_end = static_cast<std::ptrdiff_t>(sizes.combined_test);
        s.test.assign(order.begin(), order.begin() + test_end);
        if (n >= sizes.combined_train_literal + sizes.combined_test) {
            s.train.assign(order.begin() + test_end,
                           order.begin() + test_end + static_cast<std::ptrdiff_t>(sizes.combined_train_literal));
            s.note = "combined literal: " + std::to_string(sizes.combined_train_literal) + " train / " +
                     std::to_string(sizes.combined_test) + " test";
        } else {
            s.train.assign(order.begin() + test_end, order.end());
            s.note = "combined pooled: " + std::to_string(s.train.size()) + " train / " +
                     std::to_string(sizes.combined_test) + " test (corpus of " + std::to_string(n) +
                     " cannot supply " + std::to_string(sizes.combined_train_literal) + " + " +
                     std::to_string(sizes.combined_test) + ")";
        }
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

Splits make_splits(const DatasetManifest& manifest, SplitMode mode, std::uint64_t seed) {
    std::vector<DatasetTag> tags;
    for (const auto& e : manifest.entries) tags.push_back(e.tag);
    return make_splits(tags, mode, manifest.sizes, seed);
}

Corpus Corpus::subset(const std::vector<std::size_t>& indices) const {
    Corpus c;
    c.source = source;
    for (std::size_t i : indices) {
        c.images.push_back(images.at(i));
        c.ids.push_back(ids.at(i));
        c.tags.push_back(tags.at(i));
    }
    return c;
}

Corpus load_corpus(const DatasetManifest& manifest, int side) {
    manifest.validate();
    Corpus c;
    c.images.resize(manifest.entries.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        c.images[i] = resize_bilinear(load_grayscale(e.path), side, side);
        c.ids.push_back(e.path.stem().string());
        c.tags.push_back(e.tag);
    }
    return c;
}

// --- procedural phantoms ------------------------------------------------------------

namespace {

struct Blob {
    double cx, cy, rx, ry, angle, value, softness;
};

struct Stroke {
    double x0, y0, x1, y1, x2, y2;  // quadratic Bezier control points
    double half_width, value;
};

struct Wave {
    double fx, fy, phase, amplitude;
};

struct Scene {
    double background = 0.0;
    double gradient_x = 0.0, gradient_y = 0.0;
    std::vector<Blob> blobs;
    std::vector<Stroke> strokes;
    std::vector<Wave> waves;
    // Texture is applied only where the blob of this index covers the point (-1: everywhere).
    int texture_mask = -1;
};

double smoothstep(double e0, double e1, double v) {
    const double t = std::clamp((v - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Coverage in [0, 1] of an elliptical blob with a soft edge.
double blob_coverage(const Blob& b, double x, double y) {
    const double c = std::cos(b.angle), s = std::sin(b.angle);
    const double u = ((x - b.cx) * c + (y - b.cy) * s) / b.rx;
    const double v = (-(x - b.cx) * s + (y - b.cy) * c) / b.ry;
    const double r = std::sqrt(u * u + v * v);
    return 1.0 - smoothstep(1.0 - b.softness, 1.0, r);
}

double stroke_distance(const Stroke& st, double x, double y) {
    constexpr int kSegments = 16;
    double best = 1e30;
    double px = st.x0, py = st.y0;
    for (int i = 1; i <= kSegments; ++i) {
        const double t = static_cast<double>(i) / kSegments;
        const double a = (1 - t) * (1 - t), b = 2 * (1 - t) * t, c = t * t;
        const double qx = a * st.x0 + b * st.x1 + c * st.x2;
        const double qy = a * st.y0 + b * st.y1 + c * st.y2;
        const double dx = qx - px, dy = qy - py;
        const double len2 = dx * dx + dy * dy;
        double u = len2 > 0 ? ((x - px) * dx + (y - py) * dy) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        const double ex = px + u * dx - x, ey = py + u * dy - y;
        best = std::min(best, std::sqrt(ex * ex + ey * ey));
        px = qx;
        py = qy;
    }
    return best;
}

double evaluate(const Scene& sc, double x, double y, double side) {
    double v = sc.background + sc.gradient_x * (x / side - 0.5) + sc.gradient_y * (y / side - 0.5);
    for (const Blob& b : sc.blobs) v += b.value * blob_coverage(b, x, y);
    double texture = 0.0;
    for (const Wave& w : sc.waves) texture += w.amplitude * std::sin(w.fx * x + w.fy * y + w.phase);
    if (sc.texture_mask >= 0) texture *= blob_coverage(sc.blobs[static_cast<std::size_t>(sc.texture_mask)], x, y);
    v += texture;
    for (const Stroke& st : sc.strokes) {
        const double d = stroke_distance(st, x, y);
        v += st.value * (1.0 - smoothstep(st.half_width, st.half_width + 0.75, d));
    }
    return v;
}

void add_waves(Scene& sc, RandomStream& rng, int count, double amplitude, double min_freq, double max_freq) {
    for (int i = 0; i < count; ++i) {
        const double angle = rng.uniform(0.0, std::numbers::pi);
        const double freq = rng.uniform(min_freq, max_freq);
        sc.waves.push_back({freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2 * std::numbers::pi),
                            amplitude * rng.uniform(0.4, 1.0)});
    }
}

// Breast outline against a dark background with fibrous strands, calcifications and masses.
Scene mammogram_scene(RandomStream& rng, double side) {
    Scene sc;
    const double k = side / 64.0;
    const bool left = rng.uniform() < 0.5;
    sc.background = rng.uniform(0.0, 0.06);
    const double cx = left ? 0.0 : side;
    const double cy = side * rng.uniform(0.4, 0.6);
    const double rx = k * rng.uniform(34.0, 54.0), ry = k * rng.uniform(24.0, 31.0);
    sc.blobs.push_back({cx, cy, rx, ry, 0.0, rng.uniform(0.35, 0.55), 0.25});
    sc.texture_mask = 0;
    // pectoral muscle in the upper chest-wall corner
    sc.blobs.push_back({cx, 0.0, k * rng.uniform(10.0, 20.0), k * rng.uniform(14.0, 26.0),
                        rng.uniform(-0.4, 0.4), rng.uniform(0.15, 0.3), 0.15});
    const int masses = static_cast<int>(rng.below(3));
    for (int i = 0; i < masses; ++i) {
        const double mx = cx + (left ? 1 : -1) * rx * rng.uniform(0.2, 0.7);
        sc.blobs.push_back({mx, cy + ry * rng.uniform(-0.5, 0.5), k * rng.uniform(2.5, 7.0), k * rng.uniform(2.5, 7.0),
                            rng.uniform(0.0, std::numbers::pi), rng.uniform(0.08, 0.25), 0.5});
    }
    const int calcs = static_cast<int>(rng.below(5));
    for (int i = 0; i < calcs; ++i) {
        const double r = k * rng.uniform(0.6, 1.4);
        sc.blobs.push_back({cx + (left ? 1 : -1) * rx * rng.uniform(0.15, 0.8), cy + ry * rng.uniform(-0.6, 0.6), r, r,
                            0.0, rng.uniform(0.25, 0.45), 0.3});
    }
    const int strands = 3 + static_cast<int>(rng.below(6));
    const double nipple_x = cx + (left ? 1 : -1) * rx * 0.92;
    for (int i = 0; i < strands; ++i) {
        const double ey = cy + ry * rng.uniform(-0.9, 0.9);
        const double ex = cx + (left ? 1 : -1) * rng.uniform(0.0, 6.0) * k;
        sc.strokes.push_back({nipple_x, cy + rng.uniform(-3.0, 3.0) * k, (nipple_x + ex) / 2 + rng.uniform(-6.0, 6.0) * k,
                              (cy + ey) / 2 + rng.uniform(-8.0, 8.0) * k, ex, ey, k * rng.uniform(0.2, 0.6),
                              rng.uniform(0.06, 0.18)});
    }
    add_waves(sc, rng, 5, 0.06, 0.15, 0.9 / k);
    return sc;
}

// Lateral skull radiograph: cranial vault ring, soft tissue, jaw arc, teeth and vertebrae.
Scene radiograph_scene(RandomStream& rng, double side) {
    Scene sc;
    const double k = side / 64.0;
    sc.background = rng.uniform(0.05, 0.2);
    sc.gradient_x = rng.uniform(-0.15, 0.15);
    sc.gradient_y = rng.uniform(-0.15, 0.15);
    const double cx = side * rng.uniform(0.42, 0.58), cy = side * rng.uniform(0.38, 0.5);
    const double rx = k * rng.uniform(22.0, 29.0), ry = k * rng.uniform(18.0, 24.0);
    const double tilt = rng.uniform(-0.3, 0.3);
    const double bone = rng.uniform(0.35, 0.5);
    sc.blobs.push_back({cx, cy, rx, ry, tilt, bone, 0.12});
    const double wall = k * rng.uniform(2.0, 4.0);
    sc.blobs.push_back({cx, cy, rx - wall, ry - wall, tilt, -bone + rng.uniform(0.05, 0.15), 0.12});
    sc.texture_mask = 1;
    // jaw
    const double jaw_y = cy + ry * rng.uniform(0.8, 1.1);
    sc.strokes.push_back({cx - rx * 0.8, cy + ry * 0.3, cx - rx * 0.2, jaw_y + 10.0 * k, cx + rx * 0.7, jaw_y,
                          k * rng.uniform(1.0, 2.0), rng.uniform(0.25, 0.4)});
    // teeth
    const int teeth = 4 + static_cast<int>(rng.below(5));
    for (int i = 0; i < teeth; ++i) {
        const double tx = cx + rx * (0.15 + 0.6 * i / std::max(teeth - 1, 1));
        sc.blobs.push_back({tx, jaw_y - 3.0 * k, k * rng.uniform(0.8, 1.4), k * rng.uniform(2.0, 3.0), 0.0,
                            rng.uniform(0.3, 0.5), 0.3});
    }
    // cervical vertebrae
    const int vertebrae = 2 + static_cast<int>(rng.below(3));
    const double vx = cx - rx * rng.uniform(0.3, 0.6);
    for (int i = 0; i < vertebrae; ++i)
        sc.blobs.push_back({vx, cy + ry + (4.0 + 6.0 * i) * k, k * rng.uniform(3.0, 5.0), k * 2.2, 0.0,
                            rng.uniform(0.2, 0.35), 0.35});
    // sella turcica and sutures
    const double sr = k * rng.uniform(1.5, 3.0);
    sc.blobs.push_back({cx + rng.uniform(-4.0, 4.0) * k, cy + rng.uniform(-2.0, 4.0) * k, sr, sr, 0.0,
                        rng.uniform(0.15, 0.3), 0.4});
    const int sutures = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < sutures; ++i) {
        const double a0 = rng.uniform(-2.6, -0.5), a1 = a0 + rng.uniform(0.3, 1.0);
        sc.strokes.push_back({cx + rx * std::cos(a0) * 0.9, cy + ry * std::sin(a0) * 0.9,
                              cx + rng.uniform(-6.0, 6.0) * k, cy + rng.uniform(-6.0, 6.0) * k,
                              cx + rx * std::cos(a1) * 0.5, cy + ry * std::sin(a1) * 0.5, k * rng.uniform(0.2, 0.5),
                              rng.uniform(0.1, 0.2)});
    }
    add_waves(sc, rng, 4, 0.05, 0.15, 0.7 / k);
    return sc;
}

Image render(const Scene& sc, int side) {
    Image img(side, side);
    constexpr double kOffsets[2] = {0.25, 0.75};  // 2x2 supersampling per pixel
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            double acc = 0.0;
            for (double oy : kOffsets)
                for (double ox : kOffsets) acc += evaluate(sc, x + ox, y + oy, side);
            img.at(y, x) = static_cast<float>(std::clamp(acc / 4.0, 0.0, 1.0));
        }
    return img;
}

Image phantom(std::uint64_t seed, std::size_t index, PhantomStyle style, int side) {
    RandomStream rng(seed, 0x5048414E00000000ull + index);  // "PHAN"
    if (style == PhantomStyle::mixed) style = rng.uniform() < 0.5 ? PhantomStyle::mammogram : PhantomStyle::radiograph;
    const Scene sc = style == PhantomStyle::mammogram ? mammogram_scene(rng, side) : radiograph_scene(rng, side);
    return render(sc, side);
}

}  // namespace

std::vector<Image> synth_corpus(std::size_t n, std::uint64_t seed, PhantomStyle style, int side) {
    if (n < 1) throw ConfigError("synthetic corpus size must be >= 1");
    if (side < 8) throw ConfigError("synthetic images must be at least 8 pixels wide");
    std::vector<Image> out(n);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < count; ++i) {
        // Distinct styles draw from disjoint index ranges.
        const std::size_t offset = style == PhantomStyle::radiograph ? (std::size_t{1} << 32) : 0;
        out[static_cast<std::size_t>(i)] = phantom(seed, offset + static_cast<std::size_t>(i), style, side);
    }
    return out;
}

Corpus synthetic_corpus(std::size_t mmm, std::size_t dx, std::uint64_t seed, int side) {
    Corpus c;
    c.source = "synthetic";
    auto append = [&](std::vector<Image> imgs, DatasetTag tag, const char* prefix) {
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "%s_%04zu", prefix, i);
            c.images.push_back(std::move(imgs[i]));
            c.ids.emplace_back(id);
            c.tags.push_back(tag);
        }
    };
    if (mmm > 0) append(synth_corpus(mmm, seed, PhantomStyle::mammogram, side), DatasetTag::MMM, "mmm");
    if (dx > 0) append(synth_corpus(dx, seed, PhantomStyle::radiograph, side), DatasetTag::DX, "dx");
    return c;
}

}  // namespace dae
