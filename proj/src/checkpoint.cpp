#include "dae/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dae/error.hpp"

namespace dae {
namespace {

constexpr unsigned char kMagic[8] = {'D', 'A', 'E', 'C', 'K', 'P', 'T', '\0'};
constexpr std::size_t kMinSize = sizeof kMagic + 4 + 4 + 8 + 4;

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(const unsigned char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    std::vector<unsigned char>& bytes() { return bytes_; }

private:
    std::vector<unsigned char> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const unsigned char> b) : bytes_(b) {}
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw CheckpointError(CheckpointErrc::malformed, "checkpoint payload ends early");
    }
    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const unsigned char> bytes) {
    return static_cast<std::uint32_t>(
        crc32(crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const NetworkParams& params, const Architecture& arch) {
    validate_architecture(arch);
    const NetworkParams shape = zeros_like(arch);
    if (params.blocks.size() != shape.blocks.size())
        throw ConfigError("parameters do not match the architecture being saved");
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(arch.size()));
    for (const LayerSpec& l : arch) {
        w.u32(static_cast<std::uint32_t>(l.kind));
        w.u32(static_cast<std::uint32_t>(l.activation));
        w.u32(static_cast<std::uint32_t>(l.kernel_h));
        w.u32(static_cast<std::uint32_t>(l.kernel_w));
        w.u32(static_cast<std::uint32_t>(l.in_channels));
        w.u32(static_cast<std::uint32_t>(l.out_channels));
    }
    w.u64(params.parameter_count());
    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
        const ConvWeights& cw = params.blocks[b];
        if (cw.kernels.size() != shape.blocks[b].kernels.size() || cw.bias.size() != shape.blocks[b].bias.size())
            throw ConfigError("parameter block " + std::to_string(b) + " does not match the architecture");
        for (float v : cw.kernels) w.f32(v);
        for (float v : cw.bias) w.f32(v);
    }
    w.u32(crc_of(w.bytes()));
    return std::move(w.bytes());
}

ModelCheckpoint decode_checkpoint(std::span<const unsigned char> bytes) {
    if (bytes.size() < kMinSize)
        throw CheckpointError(CheckpointErrc::checksum_mismatch, "checkpoint is truncated");
    const auto body = bytes.first(bytes.size() - 4);
    Reader tail(bytes.last(4));
    if (crc_of(body) != tail.u32())
        throw CheckpointError(CheckpointErrc::checksum_mismatch, "checkpoint checksum does not match its contents");
    if (std::memcmp(body.data(), kMagic, sizeof kMagic) != 0)
        throw CheckpointError(CheckpointErrc::bad_magic, "not a checkpoint file");

    Reader r(body.subspan(sizeof kMagic));
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw CheckpointError(CheckpointErrc::version_mismatch,
                              "checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                  std::to_string(kCheckpointVersion) + ")");
    const std::uint32_t layers = r.u32();
    if (layers > 4096) throw CheckpointError(CheckpointErrc::malformed, "implausible layer count");
    ModelCheckpoint ck;
    for (std::uint32_t i = 0; i < layers; ++i) {
        LayerSpec l;
        const std::uint32_t kind = r.u32(), act = r.u32();
        if (kind > static_cast<std::uint32_t>(LayerKind::upsample) || act > static_cast<std::uint32_t>(Activation::sigmoid))
            throw CheckpointError(CheckpointErrc::malformed, "unknown layer kind in checkpoint");
        l.kind = static_cast<LayerKind>(kind);
        l.activation = static_cast<Activation>(act);
        l.kernel_h = static_cast<int>(r.u32());
        l.kernel_w = static_cast<int>(r.u32());
        l.in_channels = static_cast<int>(r.u32());
        l.out_channels = static_cast<int>(r.u32());
        ck.arch.push_back(l);
    }
    try {
        validate_architecture(ck.arch);
    } catch (const ConfigError& e) {
        throw CheckpointError(CheckpointErrc::malformed, std::string("checkpoint architecture is invalid: ") + e.what());
    }
    ck.params = zeros_like(ck.arch);
    const std::uint64_t count = r.u64();
    if (count != ck.params.parameter_count() || r.remaining() != count * 4)
        throw CheckpointError(CheckpointErrc::malformed, "checkpoint parameter count does not match its architecture");
    for (auto& b : ck.params.blocks) {
        for (float& v : b.kernels) v = r.f32();
        for (float& v : b.bias) v = r.f32();
    }
    return ck;
}

void save_checkpoint(const NetworkParams& params, const Architecture& arch, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(params, arch);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError(CheckpointErrc::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError(CheckpointErrc::io, "failed writing " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointErrc::io, "cannot open " + path.string());
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_checkpoint(bytes);
}

}  // namespace dae
