#include "featfool/harness/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "featfool/errors.hpp"

namespace featfool::harness {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void Checkpoint::add(const std::string& prefix, const models::ParamList& params) {
    for (const auto& p : params) {
        CheckpointEntry e;
        e.name = prefix + p.name;
        for (auto d : p.value.shape()) e.extents.push_back(d);
        e.values.assign(p.value.values().begin(), p.value.values().end());
        entries.push_back(std::move(e));
    }
}

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

void Checkpoint::restore(const std::string& prefix, models::ParamList& params) const {
    for (auto& p : params) {
        const CheckpointEntry* e = find(prefix + p.name);
        if (!e) throw ConfigError("checkpoint has no tensor '" + prefix + p.name + "'");
        const auto& shape = p.value.shape();
        if (!std::equal(shape.begin(), shape.end(), e->extents.begin(), e->extents.end())) {
            throw ConfigError("checkpoint tensor '" + e->name + "' has a different shape");
        }
        auto dst = p.value.values_mut();
        std::copy(e->values.begin(), e->values.end(), dst.begin());
    }
}

void Checkpoint::add_meta(const std::string& name, const std::vector<double>& values) {
    CheckpointEntry e;
    e.name = name;
    e.extents = {values.size()};
    for (double v : values) e.values.push_back(static_cast<float>(v));
    entries.push_back(std::move(e));
}

std::vector<double> Checkpoint::meta(const std::string& name) const {
    const CheckpointEntry* e = find(name);
    if (!e) throw ConfigError("checkpoint has no entry '" + name + "'");
    return {e->values.begin(), e->values.end()};
}

namespace {

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
   public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string take(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t offset() const { return pos_; }
    bool done() const { return pos_ == bytes_.size(); }

   private:
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(std::string("checkpoint truncated reading ") + what + " at offset " +
                              std::to_string(pos_));
        }
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
    std::string out(kCheckpointMagic, 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.entries.size()));
    for (const auto& e : ckpt.entries) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
        out += e.name;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.extents.size()));
        std::uint64_t n = 1;
        for (auto d : e.extents) {
            put<std::uint64_t>(out, d);
            n *= d;
        }
        if (n != e.values.size()) throw ShapeError("checkpoint tensor '" + e.name + "' extents disagree with its values");
        for (float v : e.values) put<float>(out, v);
    }
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (r.take(4, "magic") != std::string(kCheckpointMagic, 4)) throw FormatError("bad checkpoint magic at offset 0");
    const std::size_t version_at = r.offset();
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version) + " at offset " +
                          std::to_string(version_at));
    }
    const auto count = r.get<std::uint32_t>("tensor count");
    Checkpoint ckpt;
    for (std::uint32_t i = 0; i < count; ++i) {
        CheckpointEntry e;
        e.name = r.take(r.get<std::uint32_t>("name length"), "name");
        const auto rank = r.get<std::uint32_t>("rank");
        std::uint64_t n = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
            e.extents.push_back(r.get<std::uint64_t>("extent"));
            n *= e.extents.back();
        }
        if (n > bytes.size()) {
            throw FormatError("tensor '" + e.name + "' claims more values than the file holds, at offset " +
                              std::to_string(r.offset()));
        }
        e.values.resize(n);
        for (auto& v : e.values) v = r.get<float>("values");
        ckpt.entries.push_back(std::move(e));
    }
    if (!r.done()) throw FormatError("trailing bytes after the last tensor at offset " + std::to_string(r.offset()));
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::string bytes = encode_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_checkpoint(ss.str());
}

}  // namespace featfool::harness
