#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtaad/model.hpp"

namespace dtaad {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
    std::string name;
    Shape shape;
    VectorF values;
};

/// On-disk layout: magic "DTAD", format version (u32 LE), metadata block
/// (u64 LE byte length + UTF-8 structured text), then one record per array:
/// {u64 name length, name bytes, u64 rank, u64 dims[rank], float32 LE payload}.
struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::string metadata;
    std::vector<NamedArray> arrays;

    const NamedArray* find(const std::string& name) const {
        for (const NamedArray& a : arrays)
            if (a.name == name) return &a;
        return nullptr;
    }
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::vector<NamedArray> params_to_arrays(const DtaadParams<float>& params, const std::string& prefix);
DtaadParams<float> arrays_to_params(const Checkpoint& ckpt, const DtaadConfig& cfg, const std::string& prefix);

}  // namespace dtaad
