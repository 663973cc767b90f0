#include "slab/bytes.hpp"

#include <Eigen/Core>

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "slab/error.hpp"

namespace slab {

void ByteWriter::f32(float x) { u32(std::bit_cast<std::uint32_t>(x)); }

void ByteWriter::patch_u64(std::size_t pos, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) buf_.at(pos + i) = static_cast<std::uint8_t>(x >> (8 * i));
}

std::uint64_t ByteReader::get(int n, const char* section) {
    if (remaining() < static_cast<std::size_t>(n))
        throw FormatError(FormatFault::truncated, std::string("truncated stream in section '") +
                                                      section + "'");
    std::uint64_t x = 0;
    for (int i = 0; i < n; ++i) x |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return x;
}

float ByteReader::f32(const char* section) { return std::bit_cast<float>(u32(section)); }

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n, const char* section) {
    if (remaining() < n)
        throw FormatError(FormatFault::truncated, std::string("truncated stream in section '") +
                                                      section + "': need " + std::to_string(n) +
                                                      " bytes, have " + std::to_string(remaining()));
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
}

void ByteReader::seek(std::size_t pos, const char* section) {
    if (pos > data_.size())
        throw FormatError(FormatFault::truncated, std::string("offset past end of stream in section '") +
                                                      section + "'");
    pos_ = pos;
}

// Eigen converts through float; the neighbour check below repairs the rare
// double-rounding case so the result is the binary16 value nearest to x.
std::uint16_t to_half(double x) noexcept {
    const Eigen::half h(static_cast<float>(x));
    std::uint16_t bits = Eigen::numext::bit_cast<std::uint16_t>(h);
    if (!std::isfinite(x) || half_is_inf(bits) || x == 0.0) return bits;

    auto dist = [x](std::uint16_t b) { return std::fabs(from_half(b) - x); };
    std::uint16_t best = bits;
    for (std::uint16_t cand : {static_cast<std::uint16_t>(bits - 1), static_cast<std::uint16_t>(bits + 1)}) {
        if ((cand & 0x7C00u) == 0x7C00u || ((cand ^ bits) & 0x8000u)) continue;
        const double dc = dist(cand);
        const double db = dist(best);
        if (dc < db || (dc == db && (cand & 1u) == 0)) best = cand;
    }
    return best;
}

double from_half(std::uint16_t bits) noexcept {
    return static_cast<double>(static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits)));
}

bool half_is_inf(std::uint16_t bits) noexcept { return (bits & 0x7FFFu) == 0x7C00u; }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorKind::io, "read failed on '" + path.string() + "'");
    return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorKind::io, "write failed on '" + path.string() + "'");
}

}  // namespace slab
