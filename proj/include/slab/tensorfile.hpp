#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slab/tensor.hpp"

namespace slab {

// SLTN tensor container (little-endian):
//
//   magic "SLTN" | version u16 | entry_count u32
//   entry_count x { name_len u16 | name utf-8 | rows u32 | cols u32 |
//                   dtype u8 (0 = f32, 1 = f16) | offset u64 }
//   tensor data, row-major, at the absolute byte offsets given above
//
// Tensors may not overlap and must exactly fill the file after the
// directory.

inline constexpr char kTensorMagic[4] = {'S', 'L', 'T', 'N'};
inline constexpr std::uint16_t kTensorVersion = 1;

enum class DType : std::uint8_t { f32 = 0, f16 = 1 };

struct TensorEntry {
    std::string name;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    DType dtype = DType::f32;
    std::uint64_t offset = 0;

    std::size_t byte_size() const noexcept {
        return std::size_t(rows) * cols * (dtype == DType::f32 ? 4 : 2);
    }
};

class TensorFile {
public:
    static TensorFile parse(std::vector<std::uint8_t> bytes);
    static TensorFile load(const std::filesystem::path& path);

    const std::vector<TensorEntry>& entries() const noexcept { return entries_; }
    const TensorEntry* find(const std::string& name) const noexcept;
    bool contains(const std::string& name) const noexcept { return find(name) != nullptr; }

    /// Widens the named tensor to 64-bit. Throws ErrorKind::missing_entry.
    DenseMatrix get(const std::string& name) const;

private:
    std::vector<std::uint8_t> bytes_;
    std::vector<TensorEntry> entries_;
};

class TensorFileWriter {
public:
    /// Values are rounded to the target dtype; overflow is an error.
    void add(std::string name, const DenseMatrix& m, DType dtype = DType::f32);

    std::vector<std::uint8_t> finish() const;
    void write(const std::filesystem::path& path) const;

private:
    struct Pending {
        std::string name;
        DenseMatrix data;
        DType dtype;
    };
    std::vector<Pending> pending_;
};

}  // namespace slab
