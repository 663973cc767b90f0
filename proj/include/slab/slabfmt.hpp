#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "slab/decompose.hpp"
#include "slab/parallel.hpp"

namespace slab {

// .slab layout (all multi-byte fields little-endian, bit planes row-major
// and LSB-first, each bit plane padded to a whole byte):
//
//   offset  size  field
//   0       4     magic "SLAB"
//   4       2     format_version (u16)
//   6       4     d_out (u32)
//   10      4     d_in (u32)
//   14      1     bit_width_b (u8): 16 = binary16, 32 = binary32
//   15      8     nnz (u64)
//   23      1     flags (u8): bit0 = binary plane present
//   24      ...   sparse_mask   ceil(d_out*d_in/8) bytes
//                 sparse_values nnz values, row-major order of set mask bits
//                 u_values      d_out values
//                 v_values      d_in values
//                 b_plane       ceil(d_out*d_in/8) bytes, iff flags bit0

inline constexpr char kSlabMagic[4] = {'S', 'L', 'A', 'B'};
inline constexpr std::uint16_t kSlabVersion = 1;
inline constexpr std::size_t kSlabHeaderBytes = 24;
inline constexpr std::uint8_t kFlagBinaryPlane = 0x01;

/// Section sizes of one packed layer. Bit counts are logical (unpadded).
struct PackedLayout {
    std::size_t d_out = 0;
    std::size_t d_in = 0;
    int bit_width = 16;
    std::size_t nnz = 0;
    bool binary_plane = true;
    /// Factor pairs stored; the file format holds exactly one.
    std::size_t rank = 1;

    std::size_t mask_bits() const noexcept { return d_out * d_in; }
    std::size_t value_bits() const noexcept { return nnz * static_cast<std::size_t>(bit_width); }
    std::size_t factor_bits() const noexcept {
        return static_cast<std::size_t>(bit_width) * rank * (d_out + d_in);
    }
    std::size_t b_plane_bits() const noexcept { return binary_plane ? d_out * d_in : 0; }

    /// Bits charged by the CR formula: values, binary plane, factors.
    std::size_t accounted_bits() const noexcept {
        return value_bits() + b_plane_bits() + factor_bits();
    }
    /// accounted_bits() plus the sparse-mask bitmap.
    std::size_t payload_bits() const noexcept { return accounted_bits() + mask_bits(); }
    /// Header plus byte-padded sections.
    std::size_t file_bytes() const noexcept;
};

PackedLayout layout_of(const SlabDecomposition& d);

/// Serializes a rank <= 1 decomposition. Throws ErrorKind::value_overflow
/// if a value does not fit the storage format and ErrorKind::invalid_argument
/// for unsupported bit widths or ranks.
std::vector<std::uint8_t> pack(const SlabDecomposition& d);

/// Parses a .slab stream. Throws FormatError with a distinct FormatFault for
/// bad magic, version mismatch, truncation (naming the section), popcount /
/// nnz mismatch and trailing bytes.
SlabDecomposition unpack(std::span<const std::uint8_t> bytes);

/// Header fields only; validates magic and version.
PackedLayout read_layout(std::span<const std::uint8_t> bytes);

struct CrReport {
    double cr_paper = 0.0;   // CR formula, mask bitmap and header excluded
    double cr_actual = 0.0;  // 1 - payload bits / dense bits, header excluded
    std::size_t k_target = 0;
    std::size_t k_achieved = 0;
    std::size_t header_bytes = kSlabHeaderBytes;
};

/// cr_paper from nnz and the factor rank; cr_actual from `payload_bits`.
CrReport cr_report(const SlabDecomposition& d, std::size_t payload_bits);

/// cr_report against the .slab payload this decomposition packs to.
CrReport cr_report(const SlabDecomposition& d);

/// y = W_S x + sum_k u_k (.) (B (v_k (.) x)). The binary stage uses only
/// additions and subtractions. Rows are independent; the parallel variant
/// reduces each row in the same order as the serial one.
std::vector<double> slab_matvec(const SlabDecomposition& d, std::span<const double> x,
                                Exec exec = Exec::parallel);

}  // namespace slab
