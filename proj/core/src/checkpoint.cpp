#include "mcap/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mcap {

namespace {

constexpr char kMagic[8] = {'M', 'C', 'A', 'P', 'C', 'K', 'P', '1'};

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(const char* data, std::size_t size) : data_(data), size_(size) {}

    void bytes(void* dst, std::size_t n) {
        if (pos_ + n > size_) throw ParseError("checkpoint truncated");
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }
    std::uint16_t u16() {
        unsigned char b[2];
        bytes(b, 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::string str(std::size_t n) {
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

private:
    const char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

} // namespace

void save_checkpoint(const MambaCapsuleModel& model, const std::string& path) {
    AppConfig cfg;
    cfg.model = model.cfg;
    cfg.class_names = model.class_names;
    const std::string config_text = config_to_text(cfg);

    const auto params = model.parameters();
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(config_text.size()));
    out += config_text;
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put_u16(out, static_cast<std::uint16_t>(p.name().size()));
        out += p.name();
        out.push_back(0); // dtype f64
        out.push_back(static_cast<char>(p.ndim()));
        for (auto e : p.shape()) put_u64(out, e);
    }
    for (const auto& p : params) {
        for (double v : p.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint '" + path + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to checkpoint '" + path + "'");
}

MambaCapsuleModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint '" + path + "'");
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r(blob.data(), blob.size());

    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) {
        throw ParseError("'" + path + "' is not a version-1 checkpoint");
    }
    const std::string config_text = r.str(r.u32());
    const AppConfig cfg = parse_config_text(config_text);
    MambaCapsuleModel model =
        MambaCapsuleModel::init(cfg.model, /*seed=*/0, cfg.resolved_class_names());

    struct Entry {
        std::string name;
        Shape shape;
    };
    const std::uint32_t count = r.u32();
    std::vector<Entry> manifest;
    manifest.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        e.name = r.str(r.u16());
        unsigned char dtype = 0, rank = 0;
        r.bytes(&dtype, 1);
        r.bytes(&rank, 1);
        if (dtype != 0) throw ParseError("unsupported dtype in checkpoint '" + path + "'");
        for (unsigned d = 0; d < rank; ++d) e.shape.push_back(r.u64());
        manifest.push_back(std::move(e));
    }

    auto params = model.parameters();
    if (params.size() != manifest.size()) {
        throw ParseError("checkpoint holds " + std::to_string(manifest.size()) +
                         " parameters, model expects " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name() != manifest[i].name || params[i].shape() != manifest[i].shape) {
            throw ParseError("checkpoint parameter '" + manifest[i].name +
                             "' does not match model parameter '" + params[i].name() + "' " +
                             shape_str(params[i].shape()));
        }
        auto& dst = params[i].raw_values();
        for (auto& v : dst) v = std::bit_cast<double>(r.u64());
    }
    return model;
}

} // namespace mcap
