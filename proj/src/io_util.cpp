#include "sigdim/io_util.hpp"

#include <cstring>
#include <stdexcept>

namespace sigdim::io {

namespace {

template <typename T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

}  // namespace

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }
void put_u16(std::string& out, std::uint16_t v) { put_le(out, v); }
void put_u32(std::string& out, std::uint32_t v) { put_le(out, v); }
void put_u64(std::string& out, std::uint64_t v) { put_le(out, v); }

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_le(out, bits);
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_le(out, bits);
}

void Cursor::need(std::size_t n) {
    if (off_ + n > size_) throw std::runtime_error("truncated input: unexpected end of data");
}

std::uint8_t Cursor::u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[off_++]);
}

std::uint16_t Cursor::u16() {
    need(2);
    std::uint16_t v = 0;
    for (std::size_t i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(static_cast<unsigned char>(data_[off_ + i])) << (8 * i);
    off_ += 2;
    return v;
}

std::uint32_t Cursor::u32() {
    need(4);
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[off_ + i])) << (8 * i);
    off_ += 4;
    return v;
}

std::uint64_t Cursor::u64() {
    need(8);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[off_ + i])) << (8 * i);
    off_ += 8;
    return v;
}

float Cursor::f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

double Cursor::f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

void Cursor::bytes(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_ + off_, n);
    off_ += n;
}

void Cursor::skip(std::size_t n) {
    need(n);
    off_ += n;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw std::runtime_error("read failed: " + path);
    return content;
}

void atomic_write_file(const std::string& path, std::string_view content) {
    AtomicFileWriter w(path);
    w.write(content);
    w.commit();
}

AtomicFileWriter::AtomicFileWriter(const std::string& path)
    : path_(path), tmp_path_(path + ".tmp"), out_(tmp_path_, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open file for writing: " + tmp_path_);
}

AtomicFileWriter::~AtomicFileWriter() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        std::filesystem::remove(tmp_path_, ec);
    }
}

void AtomicFileWriter::commit() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed: " + tmp_path_);
    out_.close();
    std::filesystem::rename(tmp_path_, path_);
    committed_ = true;
}

}  // namespace sigdim::io
