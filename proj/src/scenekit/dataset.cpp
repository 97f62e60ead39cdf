#include "featfool/scenekit/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "featfool/diffcore/random.hpp"
#include "featfool/errors.hpp"
#include "featfool/scenekit/scene.hpp"

namespace featfool::scenekit {

namespace fs = std::filesystem;

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw ParseError("unknown split '" + name + "'");
}

std::vector<const ManifestRecord*> Manifest::split(Split s) const {
    std::vector<const ManifestRecord*> out;
    for (const auto& r : records) {
        if (r.split == s) out.push_back(&r);
    }
    return out;
}

std::string format_manifest(const Manifest& manifest) {
    std::string out;
    for (const auto& r : manifest.records) {
        out += r.id;
        out += '\t';
        out += split_name(r.split);
        out += '\t';
        out += std::to_string(r.class_label);
        out += '\t';
        out += r.image_path;
        for (const auto& c : r.captions) {
            out += '\t';
            out += c;
        }
        out += '\n';
    }
    return out;
}

Manifest parse_manifest(const std::string& text) {
    Manifest m;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        auto fail = [&](const std::string& why) {
            throw ParseError("manifest line " + std::to_string(lineno) + ": " + why);
        };
        if (fields.size() < 5) fail("expected at least 5 tab-separated fields, got " + std::to_string(fields.size()));
        ManifestRecord r;
        r.id = fields[0];
        if (r.id.empty()) fail("empty id");
        try {
            r.split = parse_split(fields[1]);
        } catch (const ParseError& e) {
            fail(e.what());
        }
        const std::string& cls = fields[2];
        if (cls.empty() || cls.find_first_not_of("0123456789") != std::string::npos) fail("bad class '" + cls + "'");
        r.class_label = std::stoul(cls);
        r.image_path = fields[3];
        if (r.image_path.empty()) fail("empty image path");
        for (std::size_t i = 4; i < fields.size(); ++i) {
            if (fields[i].empty()) fail("empty caption");
            r.captions.push_back(fields[i]);
        }
        m.records.push_back(std::move(r));
    }
    return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write manifest " + path.string());
    os << format_manifest(manifest);
    if (!os) throw IoError("failed writing manifest " + path.string());
}

Manifest read_manifest(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read manifest " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_manifest(ss.str());
}

void write_ppm(const models::Image& image, const fs::path& path) {
    if (image.channels() != 3) throw ShapeError("P6 images need 3 channels");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write image " + path.string());
    os << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
    const std::size_t h = image.height();
    const std::size_t w = image.width();
    std::string bytes(3 * h * w, '\0');
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = (static_cast<double>(image.at(c, y, x)) + 1.0) * 127.5;
                bytes[(y * w + x) * 3 + c] = static_cast<char>(static_cast<unsigned char>(std::lround(v)));
            }
        }
    }
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("failed writing image " + path.string());
}

models::Image read_ppm(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read image " + path.string());
    std::string magic;
    std::size_t w = 0, h = 0, maxval = 0;
    is >> magic >> w >> h >> maxval;
    if (!is || magic != "P6" || maxval != 255 || w == 0 || h == 0) {
        throw FormatError("not an 8-bit P6 image: " + path.string());
    }
    is.get();
    std::string bytes(3 * w * h, '\0');
    is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (is.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw FormatError("truncated pixel data in " + path.string());
    }
    std::vector<float> px(3 * w * h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                const auto b = static_cast<unsigned char>(bytes[(y * w + x) * 3 + c]);
                px[(c * h + y) * w + x] = static_cast<float>(b / 127.5 - 1.0);
            }
        }
    }
    return models::Image(3, h, w, std::move(px));
}

std::uint64_t record_seed(std::uint64_t root_seed, Split split, std::size_t index) {
    return diffcore::derive_seed(diffcore::derive_seed(root_seed, static_cast<std::uint64_t>(split)), index);
}

namespace {

struct PlannedRecord {
    ManifestRecord record;
    Scene scene;
};

std::vector<PlannedRecord> plan(const DatasetConfig& cfg) {
    std::vector<PlannedRecord> out;
    const std::pair<Split, std::size_t> sizes[] = {
        {Split::train, cfg.train}, {Split::val, cfg.val}, {Split::test, cfg.test}};
    for (auto [split, count] : sizes) {
        for (std::size_t i = 0; i < count; ++i) {
            const auto shape = static_cast<ShapeKind>(i % kShapeCount);
            Scene scene = generate_scene(record_seed(cfg.seed, split, i), shape);
            PlannedRecord p;
            char id[32];
            std::snprintf(id, sizeof id, "%s_%05zu", split_name(split), i);
            p.record.id = id;
            p.record.split = split;
            p.record.class_label = scene.class_label();
            p.record.image_path = std::string("images/") + id + ".ppm";
            const auto caps = caption_scene(scene);
            p.record.captions = {caps[0], caps[1]};
            p.scene = std::move(scene);
            out.push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace

Manifest plan_dataset(const DatasetConfig& cfg) {
    Manifest m;
    for (auto& p : plan(cfg)) m.records.push_back(std::move(p.record));
    return m;
}

Manifest build_dataset(const DatasetConfig& cfg, const fs::path& root) {
    std::error_code ec;
    fs::create_directories(root / "images", ec);
    if (ec) throw IoError("cannot create corpus directory " + (root / "images").string() + ": " + ec.message());
    Manifest m;
    for (auto& p : plan(cfg)) {
        write_ppm(render_image(p.scene), root / p.record.image_path);
        m.records.push_back(std::move(p.record));
    }
    write_manifest(m, root / kManifestName);
    return m;
}

Corpus load_corpus(const fs::path& root) {
    Corpus c;
    c.root = root;
    c.manifest = read_manifest(root / kManifestName);
    return c;
}

models::Image load_image(const Corpus& corpus, const ManifestRecord& record) {
    return read_ppm(corpus.root / record.image_path);
}

}  // namespace featfool::scenekit
