#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "prdc/common.hpp"

namespace prdc {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

/// Binary writer for the on-disk formats. All integers and doubles are
/// little-endian; doubles are raw IEEE-754 bytes so round trips are bit-exact.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path)
        : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw ConfigError("cannot open for writing: " + path);
    }

    void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), n); }
    void magic(const char (&m)[9]) { bytes(m, 8); }
    void u8(uint8_t v) { bytes(&v, 1); }
    void u32(uint32_t v) { bytes(&v, 4); }
    void u64(uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void f64_array(const double* p, size_t n) { bytes(p, n * 8); }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    void close() {
        out_.close();
        if (!out_) throw ConfigError("write failed: " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
};

/// Binary reader that tracks its byte offset; every failure reports where in
/// the file the parse stopped.
class BinaryReader {
public:
    explicit BinaryReader(const std::string& path)
        : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw ConfigError("cannot open for reading: " + path);
    }

    size_t offset() const { return offset_; }

    void bytes(void* p, size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in_.gcount()) != n) {
            throw ParseError(path_ + ": truncated file at byte " + std::to_string(offset_));
        }
        offset_ += n;
    }

    void expect_magic(const char (&m)[9]) {
        char got[8];
        bytes(got, 8);
        if (std::memcmp(got, m, 8) != 0) {
            throw ParseError(path_ + ": bad magic at byte 0 (expected \"" + std::string(m, 8) +
                             "\", got \"" + std::string(got, 8) + "\")");
        }
    }

    uint8_t u8() { uint8_t v; bytes(&v, 1); return v; }
    uint32_t u32() { uint32_t v; bytes(&v, 4); return v; }
    uint64_t u64() { uint64_t v; bytes(&v, 8); return v; }
    double f64() { double v; bytes(&v, 8); return v; }
    void f64_array(double* p, size_t n) { bytes(p, n * 8); }

    std::string str(size_t max_len = 1 << 20) {
        const uint32_t n = u32();
        if (n > max_len) {
            throw ParseError(path_ + ": string length " + std::to_string(n) +
                             " out of range at byte " + std::to_string(offset_ - 4));
        }
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

    /// Fails if the file has trailing bytes past the parsed payload.
    void expect_eof() {
        char c;
        in_.read(&c, 1);
        if (in_.gcount() != 0) {
            throw ParseError(path_ + ": trailing data at byte " + std::to_string(offset_));
        }
    }

private:
    std::ifstream in_;
    std::string path_;
    size_t offset_ = 0;
};

}  // namespace prdc
