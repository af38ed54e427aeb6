#include "dtaad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace dtaad {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'A', 'D'};
constexpr std::uint64_t kMaxNameLength = 1u << 16;
constexpr std::uint64_t kMaxRank = 32;
constexpr std::uint64_t kMaxMetadataLength = 1u << 28;

void put_bytes(std::ostream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b, 8);
}

void put_f32_payload(std::ostream& out, const VectorF& values) {
    std::vector<unsigned char> buf(static_cast<std::size_t>(values.size()) * 4);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b)
            buf[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(b)] =
                static_cast<unsigned char>(bits >> (8 * b));
    }
    put_bytes(out, buf.data(), buf.size());
}

bool get_bytes(std::istream& in, void* data, std::size_t n) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!get_bytes(in, b, 4)) throw CheckpointError(std::string("truncated checkpoint (") + what + ")");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in, const char* what) {
    unsigned char b[8];
    if (!get_bytes(in, b, 8)) throw CheckpointError(std::string("truncated checkpoint (") + what + ")");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    put_bytes(out, kMagic, 4);
    put_u32(out, ckpt.version);
    put_u64(out, ckpt.metadata.size());
    put_bytes(out, ckpt.metadata.data(), ckpt.metadata.size());
    for (const NamedArray& a : ckpt.arrays) {
        put_u64(out, a.name.size());
        put_bytes(out, a.name.data(), a.name.size());
        put_u64(out, a.shape.size());
        for (int d : a.shape) put_u64(out, static_cast<std::uint64_t>(d));
        put_f32_payload(out, a.values);
    }
    if (!out) throw IoError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    if (!get_bytes(in, magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError(path + ": not a DTAD checkpoint");
    Checkpoint ckpt;
    ckpt.version = get_u32(in, "version");
    if (ckpt.version != kCheckpointVersion)
        throw UnsupportedFormatError(path + ": unsupported checkpoint format version " +
                                     std::to_string(ckpt.version));
    const std::uint64_t meta_len = get_u64(in, "metadata length");
    if (meta_len > kMaxMetadataLength) throw CheckpointError(path + ": corrupt metadata length");
    ckpt.metadata.resize(meta_len);
    if (meta_len > 0 && !get_bytes(in, ckpt.metadata.data(), meta_len))
        throw CheckpointError(path + ": truncated checkpoint (metadata)");

    while (true) {
        unsigned char probe[8];
        in.read(reinterpret_cast<char*>(probe), 8);
        const std::streamsize got = in.gcount();
        if (got == 0) break;  // clean end of records
        if (got != 8) throw CheckpointError(path + ": truncated checkpoint (record header)");
        std::uint64_t name_len = 0;
        for (int i = 0; i < 8; ++i) name_len |= static_cast<std::uint64_t>(probe[i]) << (8 * i);
        if (name_len == 0 || name_len > kMaxNameLength)
            throw CheckpointError(path + ": corrupt record name length");
        NamedArray a;
        a.name.resize(name_len);
        if (!get_bytes(in, a.name.data(), name_len))
            throw CheckpointError(path + ": truncated checkpoint (record name)");
        const std::uint64_t rank = get_u64(in, "record rank");
        if (rank > kMaxRank) throw CheckpointError(path + ": corrupt record rank");
        a.shape.resize(rank);
        std::uint64_t count = 1;
        for (std::uint64_t d = 0; d < rank; ++d) {
            const std::uint64_t dim = get_u64(in, "record dims");
            if (dim == 0 || dim > (1u << 30)) throw CheckpointError(path + ": corrupt record dimension");
            a.shape[d] = static_cast<int>(dim);
            count *= dim;
        }
        std::vector<unsigned char> buf(count * 4);
        if (!get_bytes(in, buf.data(), buf.size()))
            throw CheckpointError(path + ": truncated checkpoint (payload of " + a.name + ")");
        a.values.resize(static_cast<Eigen::Index>(count));
        for (std::uint64_t i = 0; i < count; ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(buf[i * 4 + b]) << (8 * b);
            a.values[static_cast<Eigen::Index>(i)] = std::bit_cast<float>(bits);
        }
        ckpt.arrays.push_back(std::move(a));
    }
    return ckpt;
}

std::vector<NamedArray> params_to_arrays(const DtaadParams<float>& params, const std::string& prefix) {
    std::vector<NamedArray> arrays;
    visit_dtaad_params(params, params,
                       [&](const std::string& name, const ParamArray<float>& p, const ParamArray<float>&) {
                           arrays.push_back({prefix + name, p.shape, p.values});
                       });
    return arrays;
}

DtaadParams<float> arrays_to_params(const Checkpoint& ckpt, const DtaadConfig& cfg, const std::string& prefix) {
    DtaadParams<float> params = init_params<float>(cfg, 0);
    visit_dtaad_params(params, params,
                       [&](const std::string& name, ParamArray<float>& p, ParamArray<float>&) {
                           const NamedArray* a = ckpt.find(prefix + name);
                           if (a == nullptr) throw CheckpointError("checkpoint is missing parameter " + name);
                           if (a->shape != p.shape)
                               throw CheckpointError("checkpoint parameter " + name + " has shape " +
                                                     shape_str(a->shape) + ", model expects " +
                                                     shape_str(p.shape));
                           p.values = a->values;
                       });
    return params;
}

}  // namespace dtaad
