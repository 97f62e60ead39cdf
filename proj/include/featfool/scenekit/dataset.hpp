#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "featfool/models/types.hpp"

namespace featfool::scenekit {

enum class Split { train, val, test };

const char* split_name(Split s);
Split parse_split(const std::string& name);

struct ManifestRecord {
    std::string id;
    Split split = Split::train;
    std::size_t class_label = 0;
    std::string image_path;  // relative to the corpus root
    std::vector<std::string> captions;

    bool operator==(const ManifestRecord&) const = default;
};

struct Manifest {
    std::vector<ManifestRecord> records;

    std::vector<const ManifestRecord*> split(Split s) const;
    bool operator==(const Manifest&) const = default;
};

// One record per line, tab-separated:
//   id  split  class  image_path  caption_1  [caption_2 ...]
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
// Throws ParseError naming the 1-based line number of a malformed record and
// IoError when the file cannot be read.
Manifest read_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& text);
std::string format_manifest(const Manifest& manifest);

// Binary P6, values mapped linearly from [-1, 1] to [0, 255].
void write_ppm(const models::Image& image, const std::filesystem::path& path);
models::Image read_ppm(const std::filesystem::path& path);

struct DatasetConfig {
    std::size_t train = 2000;
    std::size_t val = 200;
    std::size_t test = 200;
    std::uint64_t seed = 1;
};

inline constexpr const char* kManifestName = "manifest.tsv";

// Renders every scene and writes images plus the manifest under `root`.
Manifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& root);

// The records build_dataset would write, without touching the disk.
Manifest plan_dataset(const DatasetConfig& cfg);

// Scene seed of a record; shared by planning and rendering.
std::uint64_t record_seed(std::uint64_t root_seed, Split split, std::size_t index);

struct Corpus {
    std::filesystem::path root;
    Manifest manifest;
};

Corpus load_corpus(const std::filesystem::path& root);
models::Image load_image(const Corpus& corpus, const ManifestRecord& record);

}  // namespace featfool::scenekit
