#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "featfool/models/params.hpp"

namespace featfool::harness {

inline constexpr char kCheckpointMagic[4] = {'F', 'F', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
    std::string name;
    std::vector<std::uint64_t> extents;
    std::vector<float> values;

    bool operator==(const CheckpointEntry&) const = default;
};

// Layout, all integers little-endian:
//   "FFCK" u32 version u32 count
//   count x { u32 name_len, name, u32 rank, rank x u64 extent, f32 values }
struct Checkpoint {
    std::vector<CheckpointEntry> entries;

    void add(const std::string& prefix, const models::ParamList& params);
    // Copies every tensor stored under `prefix` into `params`; ConfigError
    // when a tensor is missing or its shape differs.
    void restore(const std::string& prefix, models::ParamList& params) const;
    const CheckpointEntry* find(const std::string& name) const;
    // Small integer settings travel as one-row tensors.
    void add_meta(const std::string& name, const std::vector<double>& values);
    std::vector<double> meta(const std::string& name) const;

    bool operator==(const Checkpoint&) const = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
// FormatError naming the byte offset on bad magic, unknown version or
// truncation.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace featfool::harness
