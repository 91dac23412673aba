#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "features.hpp"

namespace tamlab {

// Binary dataset container. Byte layout is explicit little-endian so files
// are identical across platforms:
//   magic "TAMLABDS" (8 bytes)
//   u32 version, u64 config_hash, u64 seed
//   u32 m_col, u32 m_row, u32 k_max, u32 n_classes, u32 feature_len
//   u64 sample_count
//   records: u32 drop, u32 slot, u8 n_scheduled, u8 label, u8 flags, u8 split,
//            f32 features[feature_len]
struct DatasetHeader {
    std::uint32_t version = 1;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::uint32_t m_col = 0;
    std::uint32_t m_row = 0;
    std::uint32_t k_max = 0;
    std::uint32_t n_classes = 0;
    std::uint32_t feature_len = 0;
    std::uint64_t sample_count = 0;
};

struct DatasetFile {
    DatasetHeader header;
    std::vector<Sample> samples;
};

namespace detail {

constexpr char kDatasetMagic[8] = {'T', 'A', 'M', 'L', 'A', 'B', 'D', 'S'};
constexpr std::uint32_t kDatasetVersion = 1;

inline void put_u32(std::string &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_u64(std::string &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f32(std::string &out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class ByteReader {
  public:
    ByteReader(const std::string &buf) : buf_(buf) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    void raw(char *dst, std::size_t n) {
        need(n);
        std::memcpy(dst, buf_.data() + pos_, n);
        pos_ += n;
    }
    bool exhausted() const { return pos_ == buf_.size(); }

  private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size())
            throw std::runtime_error("dataset: truncated file");
    }
    const std::string &buf_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::string dataset_to_bytes(const DatasetFile &d) {
    if (d.header.sample_count != d.samples.size())
        throw std::invalid_argument("dataset: header count does not match records");
    std::string out;
    out.reserve(64 + d.samples.size() * (12 + 4 * d.header.feature_len));
    out.append(detail::kDatasetMagic, sizeof(detail::kDatasetMagic));
    detail::put_u32(out, d.header.version);
    detail::put_u64(out, d.header.config_hash);
    detail::put_u64(out, d.header.seed);
    detail::put_u32(out, d.header.m_col);
    detail::put_u32(out, d.header.m_row);
    detail::put_u32(out, d.header.k_max);
    detail::put_u32(out, d.header.n_classes);
    detail::put_u32(out, d.header.feature_len);
    detail::put_u64(out, d.header.sample_count);
    for (const Sample &s : d.samples) {
        if (s.features.size() != d.header.feature_len)
            throw std::invalid_argument("dataset: sample feature length mismatch");
        if (s.label >= d.header.n_classes)
            throw std::invalid_argument("dataset: sample label outside class range");
        detail::put_u32(out, s.drop);
        detail::put_u32(out, s.slot);
        out.push_back(static_cast<char>(s.n_scheduled));
        out.push_back(static_cast<char>(s.label));
        out.push_back(static_cast<char>(s.flags));
        out.push_back(static_cast<char>(s.split));
        for (float v : s.features)
            detail::put_f32(out, v);
    }
    return out;
}

inline DatasetFile dataset_from_bytes(const std::string &bytes) {
    detail::ByteReader r(bytes);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, detail::kDatasetMagic, sizeof(magic)) != 0)
        throw std::runtime_error("dataset: bad magic");
    DatasetFile d;
    d.header.version = r.u32();
    if (d.header.version != detail::kDatasetVersion)
        throw std::runtime_error("dataset: unsupported version");
    d.header.config_hash = r.u64();
    d.header.seed = r.u64();
    d.header.m_col = r.u32();
    d.header.m_row = r.u32();
    d.header.k_max = r.u32();
    d.header.n_classes = r.u32();
    d.header.feature_len = r.u32();
    d.header.sample_count = r.u64();
    d.samples.reserve(d.header.sample_count);
    for (std::uint64_t i = 0; i < d.header.sample_count; ++i) {
        Sample s;
        s.drop = r.u32();
        s.slot = r.u32();
        s.n_scheduled = r.u8();
        s.label = r.u8();
        s.flags = r.u8();
        s.split = r.u8();
        if (s.label >= d.header.n_classes)
            throw std::runtime_error("dataset: record label outside class range");
        s.features.resize(d.header.feature_len);
        for (std::uint32_t f = 0; f < d.header.feature_len; ++f)
            s.features[f] = r.f32();
        d.samples.push_back(std::move(s));
    }
    if (!r.exhausted())
        throw std::runtime_error("dataset: trailing bytes after the last record");
    return d;
}

inline void write_dataset(const DatasetFile &d, const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("dataset: cannot open for writing: " + path);
    const std::string bytes = dataset_to_bytes(d);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f)
        throw std::runtime_error("dataset: write failed: " + path);
}

inline DatasetFile read_dataset(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("dataset: cannot open for reading: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return dataset_from_bytes(bytes);
}

// Guard against mixing artifacts from different configurations.
inline void require_matching_hash(const DatasetHeader &h, std::uint64_t expected_hash) {
    if (h.config_hash != expected_hash)
        throw std::runtime_error("dataset: config hash does not match the active configuration");
}

} // namespace tamlab
