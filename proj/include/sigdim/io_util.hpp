#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace sigdim::io {

// Little-endian encoders appending to a byte buffer. Formats are pinned to be
// little-endian on every host.
void put_u8(std::string& out, std::uint8_t v);
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);
void put_f64(std::string& out, double v);

/// Bounds-checked little-endian decoder over a byte range; throws
/// std::runtime_error("truncated ...") past the end.
class Cursor {
public:
    Cursor(const char* data, std::size_t size) : data_(data), size_(size) {}
    explicit Cursor(std::string_view s) : Cursor(s.data(), s.size()) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    void bytes(char* dst, std::size_t n);
    void skip(std::size_t n);

    std::size_t offset() const { return off_; }
    std::size_t remaining() const { return size_ - off_; }
    bool at_end() const { return off_ == size_; }

private:
    void need(std::size_t n);
    const char* data_;
    std::size_t size_;
    std::size_t off_ = 0;
};

std::string read_file(const std::string& path);

/// Write-to-temp-then-rename so consumers never observe partial output.
void atomic_write_file(const std::string& path, std::string_view content);

/// Streaming variant for large outputs. Data goes to <path>.tmp and is
/// renamed on commit(); the temp file is removed if commit() never runs.
class AtomicFileWriter {
public:
    explicit AtomicFileWriter(const std::string& path);
    ~AtomicFileWriter();

    std::ostream& stream() { return out_; }
    void write(std::string_view bytes) { out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size())); }
    void commit();

private:
    std::string path_;
    std::string tmp_path_;
    std::ofstream out_;
    bool committed_ = false;
};

}  // namespace sigdim::io
