#include "skelrob/checkpoint.hpp"

#include <cstdio>
#include <cstring>

namespace skelrob::num {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<uint8_t>& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    const std::vector<uint8_t>* bytes;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > bytes->size()) data_error("checkpoint: truncated file");
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>((*bytes)[pos] | ((*bytes)[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>((*bytes)[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint8_t u8() {
        need(1);
        return (*bytes)[pos++];
    }
    double f64() {
        need(8);
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>((*bytes)[pos + i]) << (8 * i);
        pos += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes->data() + pos), n);
        pos += n;
        return s;
    }
};

} // namespace

std::vector<uint8_t> serialize_params(const ParamStore& params) {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'S', 'K', 'W', '1'});
    put_u32(out, static_cast<uint32_t>(params.values.size()));
    for (const auto& [name, t] : params.values) {
        if (name.size() > 0xffff) usage_error("checkpoint: parameter name too long");
        put_u16(out, static_cast<uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(static_cast<uint8_t>(t.rank()));
        for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
        for (double v : t.data) put_f64(out, v);
    }
    return out;
}

ParamStore deserialize_params(const std::vector<uint8_t>& bytes) {
    Reader r{&bytes};
    if (r.str(4) != "SKW1") data_error("checkpoint: bad magic, expected SKW1");
    uint32_t count = r.u32();
    ParamStore store;
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = r.str(r.u16());
        uint8_t rank = r.u8();
        if (rank == 0) data_error("checkpoint: parameter '" + name + "' has rank 0");
        std::vector<int> shape(rank);
        for (auto& d : shape) {
            uint32_t v = r.u32();
            if (v == 0 || v > 0x7fffffffu)
                data_error("checkpoint: bad dimension in parameter '" + name + "'");
            d = static_cast<int>(v);
        }
        int64_t n = numel_of(shape);
        Tensor t(shape);
        for (int64_t j = 0; j < n; ++j) t.data[static_cast<size_t>(j)] = r.f64();
        store.define(name, std::move(t));
    }
    return store;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) data_error("cannot open '" + path + "' for reading");
    std::fseek(f, 0, SEEK_END);
    long size = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<uint8_t> bytes(static_cast<size_t>(size));
    size_t got = size > 0 ? std::fread(bytes.data(), 1, bytes.size(), f) : 0;
    std::fclose(f);
    if (got != bytes.size()) data_error("short read from '" + path + "'");
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) data_error("cannot open '" + path + "' for writing");
    size_t put = bytes.empty() ? 0 : std::fwrite(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
    if (put != bytes.size()) data_error("short write to '" + path + "'");
}

void save_params(const ParamStore& params, const std::string& path) {
    write_file_bytes(path, serialize_params(params));
}

ParamStore load_params(const std::string& path) {
    return deserialize_params(read_file_bytes(path));
}

uint64_t params_checksum(const ParamStore& params) {
    std::vector<uint8_t> bytes = serialize_params(params);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace skelrob::num
