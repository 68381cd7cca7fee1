#include "dae/experiment.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dae/checkpoint.hpp"
#include "dae/error.hpp"
#include "dae/plot.hpp"
#include "dae/rng.hpp"

namespace dae {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Reads the keys of `obj` into the matching fields, rejecting keys that are not recognised.
class Fields {
public:
    Fields(const ojson& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) throw ConfigError(where_ + " must be a JSON object");
    }
    template <class T>
    void read(const char* key, T& dst) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            dst = it->template get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(where_ + "." + key + " has the wrong type");
        }
    }
    const ojson* child(const char* key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }
    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.contains(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where_);
    }

private:
    const ojson& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

ojson noise_json(const NoiseSpec& n) {
    ojson j;
    if (n.kind == NoiseKind::gaussian) {
        j["kind"] = "gaussian";
        j["p"] = n.p;
        j["mu"] = n.mu;
        j["sigma"] = n.sigma;
    } else {
        j["kind"] = "poisson";
        j["p"] = n.p;
        j["lambda"] = n.lambda;
        j["mode"] = n.poisson_mode == PoissonMode::additive ? "additive" : "substitutive";
    }
    return j;
}

NoiseSpec noise_from(const ojson& j) {
    Fields f(j, "noise spec");
    std::string kind = "gaussian", mode = "additive";
    f.read("kind", kind);
    // unspecified fields take the defaults of the named kind
    NoiseSpec n = kind == "poisson" ? NoiseSpec::poisson(0.1, 1.0) : NoiseSpec{};
    f.read("p", n.p);
    f.read("mu", n.mu);
    f.read("sigma", n.sigma);
    f.read("lambda", n.lambda);
    f.read("mode", mode);
    f.finish();
    if (kind == "gaussian") n.kind = NoiseKind::gaussian;
    else if (kind == "poisson") n.kind = NoiseKind::poisson;
    else throw ConfigError("noise kind must be 'gaussian' or 'poisson', got '" + kind + "'");
    if (mode == "additive") n.poisson_mode = PoissonMode::additive;
    else if (mode == "substitutive") n.poisson_mode = PoissonMode::substitutive;
    else throw ConfigError("poisson mode must be 'additive' or 'substitutive', got '" + mode + "'");
    n.validate();
    return n;
}

ojson config_json(const ExperimentConfig& c) {
    ojson j;
    j["schema_version"] = c.schema_version;
    j["seed"] = c.seed;
    j["corpus"] = c.corpus;
    j["synthetic_mmm"] = c.synthetic_mmm;
    j["synthetic_dx"] = c.synthetic_dx;
    j["image_side"] = c.image_side;
    j["noise"] = c.noise;
    j["filters"] = c.filters;
    j["kernel"] = c.kernel;
    j["train"] = {{"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"loss", to_string(c.train.loss)},
                  {"validation_fraction", c.train.validation_fraction},
                  {"adam",
                   {{"step_size", c.train.adam.step_size},
                    {"beta1", c.train.adam.beta1},
                    {"beta2", c.train.adam.beta2},
                    {"eps", c.train.adam.eps}}}};
    j["ssim"] = {{"alpha", c.ssim.alpha},
                 {"beta", c.ssim.beta},
                 {"gamma", c.ssim.gamma},
                 {"k1", c.ssim.k1},
                 {"k2", c.ssim.k2},
                 {"dynamic_range", c.ssim.dynamic_range},
                 {"window", c.ssim.window_name()},
                 {"numerator", c.ssim.numerator == StructureNumerator::reference ? "reference" : "literal"}};
    j["nl_means"] = {{"patch_radius", c.nl_means.patch_radius},
                     {"search_radius", c.nl_means.search_radius},
                     {"h", c.nl_means.h},
                     {"sigma", c.nl_means.sigma}};
    j["median_k"] = c.median_k;
    j["splits"] = {{"train_per_dataset", c.splits.train_per_dataset},
                   {"combined_test", c.splits.combined_test},
                   {"combined_train_literal", c.splits.combined_train_literal}};
    j["montage_images"] = c.montage_images;
    j["out"] = c.out.generic_string();
    return j;
}

int parse_window(const ojson& w) {
    if (w.is_number_integer()) return w.get<int>();
    if (w.is_string()) {
        const auto s = w.get<std::string>();
        if (s == "global") return 0;
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("ssim.window must be 'global' or a window side length");
}

// Re-raises library errors with the failing stage named, keeping the error category.
template <class F>
auto in_stage(const std::string& name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ShapeError& e) {
        throw ShapeError(e.dimension(), "stage '" + name + "': " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError("stage '" + name + "': " + e.what());
    } catch (const NumericError& e) {
        throw NumericError("stage '" + name + "': " + e.what());
    } catch (const DataError& e) {
        throw DataError("stage '" + name + "': " + e.what());
    }
}

std::vector<Image> denoise_all(const std::vector<Image>& images, const std::function<Image(const Image&)>& f) {
    std::vector<Image> out(images.size());
    const auto n = static_cast<std::int64_t>(images.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = f(images[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<std::size_t> with_tag(const std::vector<std::size_t>& idx, const Corpus& c, DatasetTag tag) {
    std::vector<std::size_t> out;
    for (std::size_t i : idx)
        if (c.tags[i] == tag) out.push_back(i);
    return out;
}

std::vector<DatasetTag> tags_present(const Corpus& c) {
    std::vector<DatasetTag> out;
    for (DatasetTag t : {DatasetTag::MMM, DatasetTag::DX, DatasetTag::OTHER})
        if (std::find(c.tags.begin(), c.tags.end(), t) != c.tags.end()) out.push_back(t);
    return out;
}

// The radiograph group when present, otherwise the largest group.
DatasetTag primary_tag(const Corpus& c) {
    const auto present = tags_present(c);
    if (std::find(present.begin(), present.end(), DatasetTag::DX) != present.end()) return DatasetTag::DX;
    DatasetTag best = present.front();
    for (DatasetTag t : present)
        if (std::count(c.tags.begin(), c.tags.end(), t) > std::count(c.tags.begin(), c.tags.end(), best)) best = t;
    return best;
}

std::string lower(std::string s) {
    for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

std::string now_iso8601() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Display names used in the tables, keyed by per-image method names.
const std::map<std::string, std::string>& row_names() {
    static const std::map<std::string, std::string> names = {
        {"noisy", "Noisy"},          {"nl_means", "NL means"},     {"median", "Median filter"},
        {"cnn_dae", "CNN DAE"},      {"cnn_dae_a", "CNN DAE(a)"}, {"cnn_dae_b", "CNN DAE(b)"}};
    return names;
}

}  // namespace

// --- configuration -------------------------------------------------------------------

void ExperimentConfig::validate() const {
    if (schema_version != kConfigSchemaVersion)
        throw ConfigError("config schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                          std::to_string(kConfigSchemaVersion) + ")");
    if (corpus.empty()) throw ConfigError("corpus must be 'synthetic' or a path");
    if (corpus == "synthetic" && synthetic_mmm + synthetic_dx == 0)
        throw ConfigError("synthetic corpus needs at least one image");
    if (filters < 1) throw ConfigError("filters must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd and >= 1");
    const int divisor = spatial_divisor(architecture());
    if (image_side < divisor || image_side % divisor != 0)
        throw ConfigError("image_side must be a positive multiple of " + std::to_string(divisor));
    if (median_k < 1 || median_k % 2 == 0) throw ConfigError("median_k must be odd and >= 1");
    if (montage_images < 0) throw ConfigError("montage_images must be >= 0");
    train.validate();
    ssim.validate();
    nl_means.validate();
    resolve_noise(noise);
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

ExperimentConfig config_from_json(std::string_view text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    Fields f(j, "config");
    f.read("schema_version", c.schema_version);
    if (c.schema_version != kConfigSchemaVersion)
        throw ConfigError("config schema_version " + std::to_string(c.schema_version) + " is not supported (expected " +
                          std::to_string(kConfigSchemaVersion) + ")");
    f.read("seed", c.seed);
    f.read("corpus", c.corpus);
    f.read("synthetic_mmm", c.synthetic_mmm);
    f.read("synthetic_dx", c.synthetic_dx);
    f.read("image_side", c.image_side);
    if (const ojson* n = f.child("noise")) {
        if (n->is_string()) c.noise = n->get<std::string>();
        else if (n->is_number_integer()) c.noise = std::to_string(n->get<int>());
        else throw ConfigError("config.noise must be a preset id or a noise spec file path");
    }
    f.read("filters", c.filters);
    f.read("kernel", c.kernel);
    if (const ojson* t = f.child("train")) {
        Fields tf(*t, "config.train");
        std::string loss = to_string(c.train.loss);
        tf.read("epochs", c.train.epochs);
        tf.read("batch_size", c.train.batch_size);
        tf.read("loss", loss);
        tf.read("validation_fraction", c.train.validation_fraction);
        if (const ojson* a = tf.child("adam")) {
            Fields af(*a, "config.train.adam");
            af.read("step_size", c.train.adam.step_size);
            af.read("beta1", c.train.adam.beta1);
            af.read("beta2", c.train.adam.beta2);
            af.read("eps", c.train.adam.eps);
            af.finish();
        }
        tf.finish();
        c.train.loss = parse_loss_kind(loss);
    }
    if (const ojson* s = f.child("ssim")) {
        Fields sf(*s, "config.ssim");
        std::string numerator = "reference";
        sf.read("alpha", c.ssim.alpha);
        sf.read("beta", c.ssim.beta);
        sf.read("gamma", c.ssim.gamma);
        sf.read("k1", c.ssim.k1);
        sf.read("k2", c.ssim.k2);
        sf.read("dynamic_range", c.ssim.dynamic_range);
        if (const ojson* w = sf.child("window")) c.ssim.window = parse_window(*w);
        sf.read("numerator", numerator);
        sf.finish();
        if (numerator == "reference") c.ssim.numerator = StructureNumerator::reference;
        else if (numerator == "literal") c.ssim.numerator = StructureNumerator::literal;
        else throw ConfigError("ssim.numerator must be 'reference' or 'literal'");
    }
    if (const ojson* n = f.child("nl_means")) {
        Fields nf(*n, "config.nl_means");
        nf.read("patch_radius", c.nl_means.patch_radius);
        nf.read("search_radius", c.nl_means.search_radius);
        nf.read("h", c.nl_means.h);
        nf.read("sigma", c.nl_means.sigma);
        nf.finish();
    }
    f.read("median_k", c.median_k);
    if (const ojson* s = f.child("splits")) {
        Fields sf(*s, "config.splits");
        sf.read("train_per_dataset", c.splits.train_per_dataset);
        sf.read("combined_test", c.splits.combined_test);
        sf.read("combined_train_literal", c.splits.combined_train_literal);
        sf.finish();
    }
    f.read("montage_images", c.montage_images);
    std::string out = c.out.string();
    f.read("out", out);
    c.out = out;
    f.finish();
    c.validate();
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string config_hash(const ExperimentConfig& cfg) {
    // The output location does not influence any result, so it is left out of the hash.
    ojson j = config_json(cfg);
    j.erase("out");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

std::string noise_to_json(const NoiseSpec& spec) { return noise_json(spec).dump(2) + "\n"; }

NoiseSpec resolve_noise(const std::string& id_or_path) {
    if (id_or_path == "sd10" || (id_or_path.size() == 1 && std::isdigit(static_cast<unsigned char>(id_or_path[0]))))
        return preset_by_id(id_or_path);
    std::ifstream in(id_or_path);
    if (!in) throw ConfigError("'" + id_or_path + "' is neither a noise preset (0-5, sd10) nor a readable file");
    try {
        return noise_from(ojson::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("noise spec " + id_or_path + " is not valid JSON: " + e.what());
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
    const std::uint64_t h = fnv1a(purpose);
    const auto out = philox4x32({static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32), 0u, 0x53454544u},
                                key_from_seed(seed));
    return static_cast<std::uint64_t>(out[0]) | (static_cast<std::uint64_t>(out[1]) << 32);
}

Corpus load_experiment_corpus(const ExperimentConfig& cfg) {
    if (cfg.corpus == "synthetic")
        return synthetic_corpus(cfg.synthetic_mmm, cfg.synthetic_dx, derive_seed(cfg.seed, "corpus"), cfg.image_side);
    const fs::path p = cfg.corpus;
    std::error_code ec;
    DatasetManifest manifest;
    if (fs::is_directory(p, ec)) manifest = scan_directory(p);
    else if (fs::is_regular_file(p, ec)) manifest = read_manifest(p);
    else throw DataError("corpus '" + cfg.corpus + "' is not 'synthetic', a directory, or a manifest file");
    manifest.sizes = cfg.splits;
    if (manifest.entries.empty()) throw DataError("corpus '" + cfg.corpus + "' contains no images");
    Corpus c = load_corpus(manifest, cfg.image_side);
    c.source = cfg.corpus;
    return c;
}

// --- evaluation ----------------------------------------------------------------------

std::vector<ResultRow> evaluate_candidates(const std::vector<Image>& clean, const std::vector<std::string>& ids,
                                           const std::vector<Candidate>& candidates, const std::string& noise_id,
                                           const SsimConfig& ssim_cfg) {
    if (ids.size() != clean.size()) throw DataError("image id count does not match the clean set");
    std::vector<ResultRow> rows;
    for (const Candidate& cand : candidates) {
        if (cand.images.size() != clean.size())
            throw DataError("method '" + cand.method + "' has " + std::to_string(cand.images.size()) +
                            " images but the clean set has " + std::to_string(clean.size()));
        const std::size_t base = rows.size();
        rows.resize(base + clean.size());
        const auto n = static_cast<std::int64_t>(clean.size());
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            rows[base + k] = {ids[k], cand.method, noise_id, ssim(clean[k], cand.images[k], ssim_cfg),
                              psnr(clean[k], cand.images[k])};
        }
    }
    return rows;
}

std::vector<MethodMean> method_means(const std::vector<ResultRow>& rows) {
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const ResultRow& r : rows) {
        auto key = std::make_pair(r.method, r.noise_id);
        if (!groups.contains(key)) keys.push_back(key);
        groups[key].first.push_back(r.ssim);
        groups[key].second.push_back(r.psnr);
    }
    std::vector<MethodMean> out;
    for (const auto& key : keys) {
        const auto& [s, p] = groups[key];
        out.push_back({key.first, key.second, s.size(), pairwise_sum(s) / static_cast<double>(s.size()),
                       pairwise_sum(p) / static_cast<double>(p.size())});
    }
    return out;
}

double mean_ssim_of(const std::vector<ResultRow>& rows, const std::string& method, const std::string& noise_id,
                    const std::string& id_prefix) {
    std::vector<double> v;
    for (const ResultRow& r : rows)
        if (r.method == method && (noise_id.empty() || r.noise_id == noise_id) && r.image_id.starts_with(id_prefix))
            v.push_back(r.ssim);
    if (v.empty()) throw DataError("no results for method '" + method + "'");
    return pairwise_sum(v) / static_cast<double>(v.size());
}

namespace {

std::string comment_block(const std::string& comment) {
    return comment.empty() || comment.back() == '\n' ? comment : comment + "\n";
}

}  // namespace

std::string report_header(const ExperimentConfig& cfg) {
    return "# config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed) + " corpus=" + cfg.corpus +
           " ssim_window=" + cfg.ssim.window_name() + "\n";
}

std::string per_image_csv(const std::vector<ResultRow>& rows, const std::string& header_comment) {
    std::string s = comment_block(header_comment) + "image_id,method,noise_id,ssim,psnr\n";
    for (const ResultRow& r : rows)
        s += r.image_id + "," + r.method + "," + r.noise_id + "," + real(r.ssim) + "," + real(r.psnr) + "\n";
    return s;
}

std::string means_csv(const std::vector<MethodMean>& means, const std::string& header_comment) {
    std::string s = comment_block(header_comment) + "method,noise_id,count,mean_ssim,mean_psnr\n";
    for (const MethodMean& m : means)
        s += m.method + "," + m.noise_id + "," + std::to_string(m.count) + "," + real(m.mean_ssim) + "," +
             real(m.mean_psnr) + "\n";
    return s;
}

std::vector<ResultRow> parse_per_image_csv(std::string_view text) {
    std::vector<ResultRow> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "image_id,method,noise_id,ssim,psnr") throw DataError("unexpected per-image CSV header");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 5) throw DataError("malformed per-image CSV line: " + line);
        try {
            rows.push_back({f[0], f[1], f[2], std::stod(f[3]), std::stod(f[4])});
        } catch (const std::exception&) {
            throw DataError("malformed number in per-image CSV line: " + line);
        }
    }
    return rows;
}

void write_text_file(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("failed writing " + path.string());
}

// --- pipeline ------------------------------------------------------------------------

ConditionOutcome run_condition(const Corpus& corpus, const Condition& cond, const ExperimentConfig& cfg,
                               const fs::path& dir, const ProgressFn& progress) {
    auto say = [&](const std::string& s) {
        if (progress) progress("[" + cond.label + "] " + s);
    };
    if (cond.train.empty() || cond.test.empty())
        throw DataError("condition '" + cond.label + "' needs non-empty training and test sets");
    const fs::path out = dir / cond.label;
    fs::create_directories(out);
    const Architecture arch = cfg.architecture();
    const std::string noise_id = cond.noise.id();

    const Tensor clean = stack(corpus.images);
    const Tensor noisy = in_stage("corrupt", [&] {
        return corrupt(clean, cond.noise, derive_seed(cfg.seed, "noise:" + noise_id));
    });

    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train:" + cond.label);
    say("training on " + std::to_string(cond.train.size()) + " images, noise " + noise_id);
    ConditionOutcome res;
    TrainResult trained = in_stage("train", [&] {
        return train(noisy.gather_batch(cond.train), clean.gather_batch(cond.train), arch, tc,
                     [&](int epoch, const TrainHistory& h) {
                         if (epoch == 1 || epoch % 10 == 0 || epoch == tc.epochs) {
                             char buf[96];
                             std::snprintf(buf, sizeof buf, "epoch %d/%d train %.5f val %.5f", epoch, tc.epochs,
                                           h.train_loss.back(), h.validation_loss.back());
                             say(buf);
                         }
                     });
    });
    res.history = std::move(trained.history);
    res.params = std::move(trained.params);
    in_stage("save", [&] {
        save_checkpoint(res.params, arch, out / "model.ckpt");
        write_history_csv(res.history, out / "history.csv");
        write_loss_svg(res.history, "Training and validation loss (" + cond.label + ")", out / "loss.svg");
    });

    say("evaluating " + std::to_string(cond.test.size()) + " test images");
    std::vector<Candidate> cands;
    std::vector<Image> clean_test, noisy_test;
    std::vector<std::string> ids;
    for (std::size_t i : cond.test) {
        clean_test.push_back(corpus.images[i]);
        ids.push_back(corpus.ids[i]);
    }
    noisy_test = unstack(noisy.gather_batch(cond.test));
    in_stage("evaluate", [&] {
        cands.push_back({"noisy", noisy_test});
        if (cond.baselines) {
            cands.push_back({"median", denoise_all(noisy_test, [&](const Image& im) { return median_filter(im, cfg.median_k); })});
            cands.push_back({"nl_means", denoise_all(noisy_test, [&](const Image& im) { return nl_means(im, cfg.nl_means); })});
        }
        cands.push_back({cond.dae_method, unstack(predict_batched(res.params, arch, stack(noisy_test)))});
        res.rows = evaluate_candidates(clean_test, ids, cands, noise_id, cfg.ssim);
    });

    const std::size_t shown = std::min<std::size_t>(static_cast<std::size_t>(cfg.montage_images), clean_test.size());
    if (shown > 0) {
        in_stage("montage", [&] {
            std::vector<std::vector<Image>> grid;
            grid.emplace_back(clean_test.begin(), clean_test.begin() + static_cast<std::ptrdiff_t>(shown));
            for (const Candidate& c : cands)
                grid.emplace_back(c.images.begin(), c.images.begin() + static_cast<std::ptrdiff_t>(shown));
            save_png(montage(grid), out / "montage.png");
        });
    }
    return res;
}

double TableReport::measured(const std::string& row, const std::string& column) const {
    for (const TableCell& c : cells)
        if (c.row == row && c.column == column) return c.measured;
    throw DataError("table " + std::to_string(table) + " has no cell (" + row + ", " + column + ")");
}

std::string table_csv(const TableReport& report, const std::string& header_comment) {
    std::string s = comment_block(header_comment) + "row,column,mean_ssim,reference_ssim\n";
    for (const TableCell& c : report.cells)
        s += c.row + "," + c.column + "," + real(c.measured) + "," + (c.reference ? real(*c.reference) : std::string()) + "\n";
    return s;
}

TableReport reproduce_table(int table, const ExperimentConfig& cfg, const ProgressFn& progress) {
    if (table < 2 || table > 4) throw ConfigError("table must be 2, 3 or 4");
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const fs::path dir = cfg.out / ("table" + std::to_string(table));
    in_stage("prepare output", [&] { fs::create_directories(dir); });
    const Corpus corpus = in_stage("load corpus", [&] { return load_experiment_corpus(cfg); });
    if (progress) progress("corpus " + corpus.source + ": " + std::to_string(corpus.size()) + " images");

    TableReport report;
    report.table = table;
    ojson timings = ojson::object();
    auto run = [&](const Condition& cond) {
        const auto t0 = std::chrono::steady_clock::now();
        ConditionOutcome o = run_condition(corpus, cond, cfg, dir, progress);
        timings[cond.label] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.rows.insert(report.rows.end(), o.rows.begin(), o.rows.end());
        report.conditions.push_back(cond.label);
        report.histories.push_back(std::move(o.history));
        return o;
    };
    auto cell = [&](const std::string& method, const std::string& noise_id, const std::string& column,
                    std::optional<double> reference, const std::string& id_prefix = {}) {
        report.cells.push_back(
            {row_names().at(method), column, mean_ssim_of(report.rows, method, noise_id, id_prefix), reference});
    };
    const SplitSizes& sizes = cfg.splits;
    const std::uint64_t split_seed = derive_seed(cfg.seed, "split");

    if (table == 2) {
        const NoiseSpec noise = resolve_noise(cfg.noise);
        const Splits splits = in_stage("split", [&] { return make_splits(corpus.tags, SplitMode::per_dataset, sizes, split_seed); });
        report.notes.push_back(splits.note);
        const std::map<DatasetTag, std::pair<double, std::pair<double, double>>> published = {
            {DatasetTag::MMM, {0.45, {0.81, 0.73}}}, {DatasetTag::DX, {0.62, {0.88, 0.86}}}};
        for (DatasetTag tag : tags_present(corpus)) {
            Condition cond{lower(to_string(tag)), noise, with_tag(splits.train, corpus, tag),
                           with_tag(splits.test, corpus, tag)};
            const ConditionOutcome o = run(cond);
            const std::string col = to_string(tag);
            const auto it = published.find(tag);
            const bool known = it != published.end() && noise == preset_by_id("0");
            auto pv = [&](auto pick) { return known ? std::optional<double>(pick(it->second)) : std::nullopt; };
            report.cells.push_back({"Noisy", col, mean_ssim_of(o.rows, "noisy"), pv([](auto& v) { return v.first; })});
            report.cells.push_back({"CNN DAE", col, mean_ssim_of(o.rows, "cnn_dae"), pv([](auto& v) { return v.second.first; })});
            report.cells.push_back({"Median filter", col, mean_ssim_of(o.rows, "median"), pv([](auto& v) { return v.second.second; })});
            report.cells.push_back({"NL means", col, mean_ssim_of(o.rows, "nl_means"), std::nullopt});
        }
    } else if (table == 3) {
        const NoiseSpec noise = resolve_noise(cfg.noise);
        const Splits splits = in_stage("split", [&] { return make_splits(corpus.tags, SplitMode::combined, sizes, split_seed); });
        report.notes.push_back(splits.note);
        std::string composition = "test set composition:";
        for (DatasetTag t : tags_present(corpus))
            composition += " " + std::string(to_string(t)) + "=" + std::to_string(with_tag(splits.test, corpus, t).size());
        report.notes.push_back(composition);
        // Model (a): a single-dataset training set of the per-dataset size, disjoint from the test set.
        const DatasetTag small_tag = primary_tag(corpus);
        std::vector<std::size_t> pool = with_tag(splits.train, corpus, small_tag);
        RandomStream rng(derive_seed(cfg.seed, "small-train"), 0);
        shuffle(pool, rng);
        pool.resize(std::min(pool.size(), sizes.train_per_dataset));
        std::sort(pool.begin(), pool.end());
        report.notes.push_back("model (a) trains on " + std::to_string(pool.size()) + " " + to_string(small_tag) +
                               " images; model (b) on " + std::to_string(splits.train.size()) + " pooled images");
        const bool known = noise == preset_by_id("0");
        auto pv = [&](double v) { return known ? std::optional<double>(v) : std::nullopt; };
        run({"a_small", noise, pool, splits.test, "cnn_dae_a", true});
        run({"b_combined", noise, splits.train, splits.test, "cnn_dae_b", false});
        const std::string id = noise.id();
        cell("noisy", id, "SSIM", pv(0.63));
        cell("nl_means", id, "SSIM", pv(0.62));
        cell("median", id, "SSIM", pv(0.80));
        cell("cnn_dae_a", id, "SSIM", pv(0.89));
        cell("cnn_dae_b", id, "SSIM", pv(0.90));
        // the noisy rows of the second condition duplicate the first; keep one copy
        std::vector<ResultRow> dedup;
        std::set<std::pair<std::string, std::string>> seen;
        for (const ResultRow& r : report.rows)
            if (seen.insert({r.image_id, r.method}).second) dedup.push_back(r);
        report.rows = std::move(dedup);
    } else {
        const DatasetTag tag = primary_tag(corpus);
        const Splits splits = in_stage("split", [&] { return make_splits(corpus.tags, SplitMode::per_dataset, sizes, split_seed); });
        report.notes.push_back(splits.note);
        report.notes.push_back(std::string("conditions use the ") + to_string(tag) + " dataset split");
        struct Column {
            const char* label;
            const char* preset;
            double noisy, nlm, median, dae;
        };
        const Column columns[] = {{"p=0.5", "1", 0.10, 0.25, 0.28, 0.70},
                                  {"sd=5", "3", 0.03, 0.03, 0.11, 0.55},
                                  {"sd=10", "sd10", 0.01, 0.01, 0.03, 0.39},
                                  {"Poisson lambda=5", "5", 0.33, 0.15, 0.17, 0.85}};
        const auto train_idx = with_tag(splits.train, corpus, tag), test_idx = with_tag(splits.test, corpus, tag);
        for (const Column& c : columns) {
            const NoiseSpec noise = preset_by_id(c.preset);
            std::string label = std::string("preset_") + c.preset;
            run({label, noise, train_idx, test_idx});
            cell("noisy", noise.id(), c.label, c.noisy);
            cell("nl_means", noise.id(), c.label, c.nlm);
            cell("median", noise.id(), c.label, c.median);
            cell("cnn_dae", noise.id(), c.label, c.dae);
        }
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    in_stage("write report", [&] {
        const std::string header = report_header(cfg) + "# table=" + std::to_string(table) + "\n";
        write_text_file(dir / ("table" + std::to_string(table) + ".csv"), table_csv(report, header));
        write_text_file(dir / "per_image.csv", per_image_csv(report.rows, header));
        write_text_file(dir / "means.csv", means_csv(method_means(report.rows), header));
        ojson meta;
        meta["table"] = table;
        meta["config_hash"] = config_hash(cfg);
        meta["seed"] = cfg.seed;
        meta["corpus_source"] = corpus.source;
        meta["corpus_size"] = corpus.size();
        meta["notes"] = report.notes;
        meta["finished_at"] = now_iso8601();
        meta["wall_seconds"] = wall;
        meta["condition_seconds"] = timings;
        meta["config"] = config_json(cfg);
        write_text_file(dir / "metadata.json", meta.dump(2) + "\n");
    });
    return report;
}

}  // namespace dae
