#include "slab/slabfmt.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "slab/bytes.hpp"
#include "slab/error.hpp"

namespace slab {

namespace {

std::size_t plane_bytes(std::size_t bits) { return (bits + 7) / 8; }

void write_value(ByteWriter& w, double x, int bit_width, const char* section) {
    if (bit_width == 16) {
        const std::uint16_t h = to_half(x);
        if (half_is_inf(h))
            throw Error(ErrorKind::value_overflow, std::string(section) + ": value " + std::to_string(x) +
                                                       " overflows binary16");
        w.f16_bits(h);
    } else {
        const auto f = static_cast<float>(x);
        if (std::isinf(f))
            throw Error(ErrorKind::value_overflow, std::string(section) + ": value " + std::to_string(x) +
                                                       " overflows binary32");
        w.f32(f);
    }
}

double read_value(ByteReader& r, int bit_width, const char* section) {
    return bit_width == 16 ? from_half(r.u16(section)) : static_cast<double>(r.f32(section));
}

std::vector<double> read_values(ByteReader& r, std::size_t n, int bit_width, const char* section) {
    // Check the whole section up front so truncation names it even when n == 0 words remain.
    const std::size_t need = n * static_cast<std::size_t>(bit_width / 8);
    if (r.remaining() < need)
        throw FormatError(FormatFault::truncated,
                          std::string("truncated stream in section '") + section + "': need " +
                              std::to_string(need) + " bytes, have " + std::to_string(r.remaining()));
    std::vector<double> out(n);
    for (auto& e : out) {
        e = read_value(r, bit_width, section);
        if (!std::isfinite(e))
            throw FormatError(FormatFault::bad_field, std::string(section) + ": non-finite value");
    }
    return out;
}

BitPlane read_plane(ByteReader& r, std::size_t rows, std::size_t cols, const char* section) {
    const auto raw = r.bytes(plane_bytes(rows * cols), section);
    std::vector<std::uint8_t> bytes(raw.begin(), raw.end());
    if ((rows * cols) % 8 != 0) {
        const auto pad = static_cast<std::uint8_t>(~((1u << ((rows * cols) % 8)) - 1u));
        if (bytes.back() & pad)
            throw FormatError(FormatFault::bad_field, std::string(section) + ": padding bits are not zero");
    }
    return BitPlane(rows, cols, std::move(bytes));
}

struct Header {
    PackedLayout layout;
    std::uint8_t flags = 0;
};

Header read_header(ByteReader& r) {
    const auto magic = r.bytes(4, "header");
    if (std::memcmp(magic.data(), kSlabMagic, 4) != 0)
        throw FormatError(FormatFault::bad_magic, "not a .slab stream: bad magic");
    const std::uint16_t version = r.u16("header");
    if (version != kSlabVersion)
        throw FormatError(FormatFault::version_mismatch, "unsupported .slab version " +
                                                             std::to_string(version) + " (expected " +
                                                             std::to_string(kSlabVersion) + ")");
    Header h;
    h.layout.d_out = r.u32("header");
    h.layout.d_in = r.u32("header");
    h.layout.bit_width = r.u8("header");
    h.layout.nnz = r.u64("header");
    h.flags = r.u8("header");
    if (h.layout.bit_width != 16 && h.layout.bit_width != 32)
        throw FormatError(FormatFault::bad_field, "unsupported bit width " + std::to_string(h.layout.bit_width));
    if (h.flags & ~kFlagBinaryPlane)
        throw FormatError(FormatFault::bad_field, "unknown flag bits " + std::to_string(h.flags));
    if (h.layout.d_out == 0 || h.layout.d_in == 0)
        throw FormatError(FormatFault::bad_field, "zero dimension in header");
    if (h.layout.nnz > h.layout.d_out * h.layout.d_in)
        throw FormatError(FormatFault::nnz_mismatch, "nnz " + std::to_string(h.layout.nnz) +
                                                         " exceeds d_out*d_in");
    h.layout.binary_plane = h.flags & kFlagBinaryPlane;
    return h;
}

}  // namespace

std::size_t PackedLayout::file_bytes() const noexcept {
    const std::size_t word = static_cast<std::size_t>(bit_width) / 8;
    return kSlabHeaderBytes + plane_bytes(mask_bits()) + nnz * word + rank * (d_out + d_in) * word +
           plane_bytes(b_plane_bits());
}

PackedLayout layout_of(const SlabDecomposition& d) {
    PackedLayout l;
    l.d_out = d.d_out;
    l.d_in = d.d_in;
    l.bit_width = d.meta.bit_width;
    l.nnz = d.sparse.nnz();
    l.binary_plane = d.binary_plane;
    l.rank = d.rank() > 1 ? d.rank() : 1;
    return l;
}

std::vector<std::uint8_t> pack(const SlabDecomposition& d) {
    const int b = d.meta.bit_width;
    if (b != 16 && b != 32)
        throw Error(ErrorKind::invalid_argument, "pack: bit width " + std::to_string(b) +
                                                     " is not supported (16 or 32)");
    if (d.rank() > 1)
        throw Error(ErrorKind::invalid_argument, "pack: only rank-1 factors are representable");
    if (d.sparse.rows() != d.d_out || d.sparse.cols() != d.d_in ||
        d.b_plane.rows() != d.d_out || d.b_plane.cols() != d.d_in)
        throw Error(ErrorKind::shape_mismatch, "pack: component shapes disagree with dims");
    if (d.sparse.mask().popcount() != d.sparse.nnz())
        throw Error(ErrorKind::shape_mismatch, "pack: nnz mismatch between mask and values");
    if (d.d_out > UINT32_MAX || d.d_in > UINT32_MAX)
        throw Error(ErrorKind::invalid_argument, "pack: dimension exceeds u32");

    const PackedLayout layout = layout_of(d);
    ByteWriter w;
    w.text(std::string_view(kSlabMagic, 4));
    w.u16(kSlabVersion);
    w.u32(static_cast<std::uint32_t>(d.d_out));
    w.u32(static_cast<std::uint32_t>(d.d_in));
    w.u8(static_cast<std::uint8_t>(b));
    w.u64(d.sparse.nnz());
    w.u8(d.binary_plane ? kFlagBinaryPlane : 0);

    w.bytes(d.sparse.mask().bytes());
    for (double x : d.sparse.values()) write_value(w, x, b, "sparse_values");
    for (std::size_t i = 0; i < d.d_out; ++i) write_value(w, d.rank() ? d.u[i] : 0.0, b, "u_values");
    for (std::size_t j = 0; j < d.d_in; ++j) write_value(w, d.rank() ? d.v[j] : 0.0, b, "v_values");
    if (d.binary_plane) w.bytes(d.b_plane.bits().bytes());

    if (w.size() != layout.file_bytes())
        throw Error(ErrorKind::format, "pack: internal size mismatch");
    return std::move(w).take();
}

PackedLayout read_layout(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    return read_header(r).layout;
}

SlabDecomposition unpack(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const Header h = read_header(r);
    const auto& l = h.layout;

    BitPlane mask = read_plane(r, l.d_out, l.d_in, "sparse_mask");
    if (mask.popcount() != l.nnz)
        throw FormatError(FormatFault::nnz_mismatch, "sparse_mask popcount " +
                                                         std::to_string(mask.popcount()) +
                                                         " != header nnz " + std::to_string(l.nnz));
    auto values = read_values(r, l.nnz, l.bit_width, "sparse_values");
    auto u = read_values(r, l.d_out, l.bit_width, "u_values");
    auto v = read_values(r, l.d_in, l.bit_width, "v_values");

    SlabDecomposition d;
    d.d_out = l.d_out;
    d.d_in = l.d_in;
    d.binary_plane = l.binary_plane;
    d.b_plane = l.binary_plane ? SignMatrix(read_plane(r, l.d_out, l.d_in, "b_plane"))
                               : SignMatrix(l.d_out, l.d_in);
    if (r.remaining() != 0)
        throw FormatError(FormatFault::trailing_bytes, std::to_string(r.remaining()) +
                                                           " trailing bytes after last section");

    d.sparse = SparsePlane(std::move(mask), std::move(values));
    d.u = std::move(u);
    d.v = std::move(v);
    d.meta.bit_width = l.bit_width;
    d.meta.binary_plane = l.binary_plane;
    d.k_target = l.nnz;
    return d;
}

CrReport cr_report(const SlabDecomposition& d, std::size_t payload_bits) {
    const double b = d.meta.bit_width;
    const double dense_bits = b * static_cast<double>(d.d_out) * static_cast<double>(d.d_in);
    const double stored = b * static_cast<double>(d.sparse.nnz()) +
                          (d.binary_plane ? static_cast<double>(d.d_out * d.d_in) : 0.0) +
                          b * static_cast<double>(d.rank()) * static_cast<double>(d.d_out + d.d_in);
    CrReport rep;
    rep.cr_paper = 1.0 - stored / dense_bits;
    rep.cr_actual = 1.0 - static_cast<double>(payload_bits) / dense_bits;
    rep.k_target = d.k_target;
    rep.k_achieved = d.sparse.nnz();
    return rep;
}

CrReport cr_report(const SlabDecomposition& d) { return cr_report(d, layout_of(d).payload_bits()); }

namespace {

// `n` <= 64 bits of an LSB-first plane starting at bit `first`.
std::uint64_t load_bits(std::span<const std::uint8_t> bytes, std::size_t first, std::size_t n) {
    const std::size_t byte = first >> 3, shift = first & 7;
    const std::size_t need = (shift + n + 7) >> 3;
    std::uint64_t lo = 0;
    std::uint8_t hi = 0;
    for (std::size_t i = 0; i < need && i < 8; ++i) lo |= std::uint64_t(bytes[byte + i]) << (8 * i);
    if (need > 8) hi = bytes[byte + 8];
    std::uint64_t word = lo >> shift;
    if (shift) word |= std::uint64_t(hi) << (64 - shift);
    return n == 64 ? word : word & ((std::uint64_t(1) << n) - 1);
}

}  // namespace

std::vector<double> slab_matvec(const SlabDecomposition& d, std::span<const double> x, Exec exec) {
    if (x.size() != d.d_in)
        throw Error(ErrorKind::shape_mismatch, "slab_matvec: x has " + std::to_string(x.size()) +
                                                   " entries, expected " + std::to_string(d.d_in));
    const std::size_t rows = d.d_out;
    const std::size_t cols = d.d_in;
    const std::size_t rank = d.rank();

    // z_k = v_k (.) x
    std::vector<double> z(rank * cols);
    for (std::size_t k = 0; k < rank; ++k)
        for (std::size_t c = 0; c < cols; ++c) z[k * cols + c] = d.v[k * cols + c] * x[c];

    std::vector<double> y(rows);
    const auto offsets = d.sparse.row_offsets();
    const auto values = d.sparse.values();
    const auto mask_bytes = d.sparse.mask().bytes();
    const auto sign_bytes = d.b_plane.bits().bytes();
    const bool binary = d.binary_plane;

    const auto nrows = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (std::ptrdiff_t rr = 0; rr < nrows; ++rr) {
        const auto r = static_cast<std::size_t>(rr);
        const std::size_t base = r * cols;

        double acc = 0.0;
        std::size_t k = offsets[r];
        for (std::size_t c = 0; c < cols && k < offsets[r + 1]; c += 64) {
            for (auto word = load_bits(mask_bytes, base + c, std::min<std::size_t>(64, cols - c)); word;
                 word &= word - 1)
                acc += values[k++] * x[c + static_cast<std::size_t>(std::countr_zero(word))];
        }

        for (std::size_t q = 0; q < rank; ++q) {
            const double* zq = z.data() + q * cols;
            double bz = 0.0;
            if (binary) {
                for (std::size_t c = 0; c < cols; c += 64) {
                    const std::size_t n = std::min<std::size_t>(64, cols - c);
                    const auto word = load_bits(sign_bytes, base + c, n);
                    for (std::size_t t = 0; t < n; ++t)
                        bz += zq[c + t] * (static_cast<double>((word >> t) & 1u) * 2.0 - 1.0);
                }
            } else {
                for (std::size_t c = 0; c < cols; ++c) bz += zq[c];
            }
            acc += d.u[q * rows + r] * bz;
        }
        y[r] = acc;
    }
    return y;
}

}  // namespace slab
