#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace slab {

/// Little-endian byte sink.
class ByteWriter {
public:
    void u8(std::uint8_t x) { buf_.push_back(x); }
    void u16(std::uint16_t x) { put(x, 2); }
    void u32(std::uint32_t x) { put(x, 4); }
    void u64(std::uint64_t x) { put(x, 8); }
    void f32(float x);
    void f16_bits(std::uint16_t bits) { u16(bits); }
    void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void text(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    std::size_t size() const noexcept { return buf_.size(); }
    std::vector<std::uint8_t> take() && { return std::move(buf_); }
    const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }

    /// Overwrites 8 bytes at `pos` (back-patching offsets).
    void patch_u64(std::size_t pos, std::uint64_t x);

private:
    void put(std::uint64_t x, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

/// Little-endian byte source over a borrowed buffer. Every read names the
/// section it belongs to so a short buffer reports where it ran out.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8(const char* section) { return static_cast<std::uint8_t>(get(1, section)); }
    std::uint16_t u16(const char* section) { return static_cast<std::uint16_t>(get(2, section)); }
    std::uint32_t u32(const char* section) { return static_cast<std::uint32_t>(get(4, section)); }
    std::uint64_t u64(const char* section) { return get(8, section); }
    float f32(const char* section);
    std::span<const std::uint8_t> bytes(std::size_t n, const char* section);

    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    void seek(std::size_t pos, const char* section);

private:
    std::uint64_t get(int n, const char* section);

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// IEEE binary16 conversions. to_half rounds to nearest, ties to even, and
/// returns the infinity pattern on overflow.
std::uint16_t to_half(double x) noexcept;
double from_half(std::uint16_t bits) noexcept;
bool half_is_inf(std::uint16_t bits) noexcept;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);

}  // namespace slab
