#include "slab/tensorfile.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "slab/bytes.hpp"
#include "slab/error.hpp"

namespace slab {

TensorFile TensorFile::parse(std::vector<std::uint8_t> bytes) {
    TensorFile tf;
    tf.bytes_ = std::move(bytes);
    ByteReader r(tf.bytes_);

    const auto magic = r.bytes(4, "header");
    if (std::memcmp(magic.data(), kTensorMagic, 4) != 0)
        throw FormatError(FormatFault::bad_magic, "not an SLTN tensor file: bad magic");
    const std::uint16_t version = r.u16("header");
    if (version != kTensorVersion)
        throw FormatError(FormatFault::version_mismatch, "unsupported SLTN version " + std::to_string(version));
    const std::uint32_t count = r.u32("header");

    std::set<std::string> names;
    tf.entries_.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        TensorEntry e;
        const std::uint16_t len = r.u16("directory");
        const auto name = r.bytes(len, "directory");
        e.name.assign(name.begin(), name.end());
        e.rows = r.u32("directory");
        e.cols = r.u32("directory");
        const std::uint8_t dt = r.u8("directory");
        if (dt > 1) throw FormatError(FormatFault::bad_field, "entry '" + e.name + "': unknown dtype " + std::to_string(dt));
        e.dtype = static_cast<DType>(dt);
        e.offset = r.u64("directory");
        if (!names.insert(e.name).second)
            throw FormatError(FormatFault::bad_field, "duplicate tensor name '" + e.name + "'");
        tf.entries_.push_back(std::move(e));
    }

    const std::size_t data_start = r.pos();
    std::vector<const TensorEntry*> by_offset;
    for (const auto& e : tf.entries_) by_offset.push_back(&e);
    std::sort(by_offset.begin(), by_offset.end(),
              [](auto* a, auto* b) { return a->offset < b->offset; });

    std::size_t cursor = data_start;
    std::size_t total = 0;
    for (const auto* e : by_offset) {
        if (e->offset < cursor)
            throw FormatError(FormatFault::bad_field, "tensor '" + e->name + "' overlaps the directory or a previous tensor");
        if (e->offset + e->byte_size() > tf.bytes_.size())
            throw FormatError(FormatFault::truncated, "truncated stream in tensor '" + e->name + "'");
        cursor = e->offset + e->byte_size();
        total += e->byte_size();
    }
    if (data_start + total != tf.bytes_.size())
        throw FormatError(FormatFault::trailing_bytes, "declared tensor sizes (" + std::to_string(total) +
                                                           " bytes) do not fill the file");
    return tf;
}

TensorFile TensorFile::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const TensorEntry* TensorFile::find(const std::string& name) const noexcept {
    for (const auto& e : entries_)
        if (e.name == name) return &e;
    return nullptr;
}

DenseMatrix TensorFile::get(const std::string& name) const {
    const TensorEntry* e = find(name);
    if (!e) throw Error(ErrorKind::missing_entry, "tensor file has no entry '" + name + "'");
    ByteReader r(bytes_);
    r.seek(e->offset, name.c_str());
    std::vector<double> data(std::size_t(e->rows) * e->cols);
    for (auto& x : data)
        x = e->dtype == DType::f32 ? static_cast<double>(r.f32(name.c_str())) : from_half(r.u16(name.c_str()));
    for (double x : data)
        if (!std::isfinite(x))
            throw FormatError(FormatFault::bad_field, "tensor '" + name + "' holds a non-finite value");
    return DenseMatrix(e->rows, e->cols, std::move(data));
}

void TensorFileWriter::add(std::string name, const DenseMatrix& m, DType dtype) {
    if (name.size() > UINT16_MAX) throw Error(ErrorKind::invalid_argument, "tensor name too long");
    for (const auto& p : pending_)
        if (p.name == name) throw Error(ErrorKind::invalid_argument, "duplicate tensor name '" + name + "'");
    pending_.push_back({std::move(name), m, dtype});
}

std::vector<std::uint8_t> TensorFileWriter::finish() const {
    ByteWriter w;
    w.text(std::string_view(kTensorMagic, 4));
    w.u16(kTensorVersion);
    w.u32(static_cast<std::uint32_t>(pending_.size()));
    std::vector<std::size_t> offset_slots;
    for (const auto& p : pending_) {
        w.u16(static_cast<std::uint16_t>(p.name.size()));
        w.text(p.name);
        w.u32(static_cast<std::uint32_t>(p.data.rows()));
        w.u32(static_cast<std::uint32_t>(p.data.cols()));
        w.u8(static_cast<std::uint8_t>(p.dtype));
        offset_slots.push_back(w.size());
        w.u64(0);
    }
    for (std::size_t i = 0; i < pending_.size(); ++i) {
        const auto& p = pending_[i];
        w.patch_u64(offset_slots[i], w.size());
        for (double x : p.data.data()) {
            if (p.dtype == DType::f32) {
                const auto f = static_cast<float>(x);
                if (std::isinf(f)) throw Error(ErrorKind::value_overflow, "tensor '" + p.name + "' overflows f32");
                w.f32(f);
            } else {
                const auto h = to_half(x);
                if (half_is_inf(h)) throw Error(ErrorKind::value_overflow, "tensor '" + p.name + "' overflows f16");
                w.f16_bits(h);
            }
        }
    }
    return std::move(w).take();
}

void TensorFileWriter::write(const std::filesystem::path& path) const { write_file(path, finish()); }

}  // namespace slab
