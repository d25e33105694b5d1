#pragma once

// Little-endian primitives shared by the container and checkpoint formats.

#include "sinceeg/error.hpp"

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace sinceeg::detail {

class ByteWriter {
public:
    void bytes(const void* src, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(src);
        buf_.insert(buf_.end(), p, p + n);
    }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    const std::vector<std::uint8_t>& buffer() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& buf, std::string what) : buf_(buf), what_(std::move(what)) {}

    std::uint64_t offset() const { return pos_; }
    std::uint64_t remaining() const { return buf_.size() - pos_; }

    void need(std::size_t n, const char* field) const {
        if (remaining() < n)
            throw FormatError(what_ + ": truncated while reading " + field, pos_);
    }
    std::uint8_t u8(const char* field) {
        need(1, field);
        return buf_[pos_++];
    }
    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64(const char* field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
        return v;
    }
    float f32(const char* field) { return std::bit_cast<float>(u32(field)); }
    double f64(const char* field) { return std::bit_cast<double>(u64(field)); }
    std::string tag(std::size_t n, const char* field) {
        need(n, field);
        std::string s(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }

private:
    const std::vector<std::uint8_t>& buf_;
    std::string what_;
    std::uint64_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path, const std::string& what);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes, const std::string& what);

}  // namespace sinceeg::detail
