#include "tds/layout.hpp"

#include "tds/error.hpp"

#include <algorithm>
#include <string>

namespace tds {

namespace {

constexpr std::size_t axis(Direction d) noexcept { return static_cast<std::size_t>(d); }

/// (line index, position) of a Cartesian coordinate for lines along `d`.
struct LineCoord {
    std::size_t line;
    std::size_t position;
};

LineCoord to_line(const std::array<std::size_t, 3>& ext, Direction d, std::size_t i, std::size_t j,
                  std::size_t k) noexcept {
    switch (d) {
    case Direction::X: return {j + ext[1] * k, i};
    case Direction::Y: return {i + ext[0] * k, j};
    case Direction::Z: return {i + ext[0] * j, k};
    }
    return {0, 0};
}

std::array<std::size_t, 3> from_line(const std::array<std::size_t, 3>& ext, Direction d,
                                     std::size_t line, std::size_t position) noexcept {
    switch (d) {
    case Direction::X: return {position, line % ext[1], line / ext[1]};
    case Direction::Y: return {line % ext[0], position, line / ext[0]};
    case Direction::Z: return {line % ext[0], line / ext[0], position};
    }
    return {0, 0, 0};
}

} // namespace

// ───────────────── LayoutDescriptor ──────────────────────────────────────

LayoutDescriptor::LayoutDescriptor(std::size_t nx, std::size_t ny, std::size_t nz, std::size_t sz,
                                   Direction direction, bool pad)
    : extents_{nx, ny, nz}, sz_(sz), direction_(direction), pad_(pad) {
    if (nx == 0 || ny == 0 || nz == 0) {
        throw Error(ErrorKind::InvalidArgument, "grid extents must be positive");
    }
    if (sz == 0) {
        throw Error(ErrorKind::InvalidArgument, "group width must be positive");
    }
    if (!pad && line_count() % sz != 0) {
        throw Error(ErrorKind::DivisibilityError,
                    std::to_string(line_count()) + " lines do not split into groups of " +
                        std::to_string(sz));
    }
}

std::size_t LayoutDescriptor::line_length() const noexcept { return extents_[axis(direction_)]; }

std::size_t LayoutDescriptor::line_count() const noexcept {
    return point_count() / line_length();
}

std::size_t LayoutDescriptor::group_count() const noexcept {
    return (line_count() + sz_ - 1) / sz_;
}

std::size_t LayoutDescriptor::storage_size() const noexcept {
    return sz_ * line_length() * group_count();
}

PackedIndex LayoutDescriptor::cartesian_to_packed(std::size_t i, std::size_t j, std::size_t k) const {
    if (i >= nx() || j >= ny() || k >= nz()) {
        throw Error(ErrorKind::OutOfBounds, "grid index (" + std::to_string(i) + "," +
                                                std::to_string(j) + "," + std::to_string(k) +
                                                ") outside extents");
    }
    const auto lc = to_line(extents_, direction_, i, j, k);
    return {lc.line % sz_, lc.position, lc.line / sz_};
}

std::array<std::size_t, 3> LayoutDescriptor::packed_to_cartesian(const PackedIndex& p) const {
    const std::size_t line = p.group * sz_ + p.lane;
    if (p.lane >= sz_ || p.position >= line_length() || line >= line_count()) {
        throw Error(ErrorKind::OutOfBounds, "packed index outside layout");
    }
    return from_line(extents_, direction_, line, p.position);
}

LayoutDescriptor LayoutDescriptor::with_direction(Direction d) const {
    return {nx(), ny(), nz(), sz_, d, pad_};
}

LayoutDescriptor LayoutDescriptor::with_line_length(std::size_t n) const {
    auto ext = extents_;
    ext[axis(direction_)] = n;
    return {ext[0], ext[1], ext[2], sz_, direction_, pad_};
}

// ───────────────── Fields ────────────────────────────────────────────────

CartesianField::CartesianField(std::size_t nx, std::size_t ny, std::size_t nz)
    : nx_(nx), ny_(ny), nz_(nz), data_(nx * ny * nz, 0.0) {}

CartesianField::CartesianField(std::size_t nx, std::size_t ny, std::size_t nz, std::vector<double> data)
    : nx_(nx), ny_(ny), nz_(nz), data_(std::move(data)) {
    if (data_.size() != nx * ny * nz) {
        throw Error(ErrorKind::InvalidArgument, "Cartesian field size mismatch");
    }
}

GroupedField::GroupedField(const LayoutDescriptor& layout)
    : layout_(layout), data_(layout.storage_size(), 0.0) {}

GroupedField::GroupedField(const LayoutDescriptor& layout, std::vector<double> data)
    : layout_(layout), data_(std::move(data)) {
    if (data_.size() != layout_.storage_size()) {
        throw Error(ErrorKind::InvalidArgument, "grouped field size mismatch");
    }
}

// ───────────────── pack / unpack / reorder ───────────────────────────────

GroupedField pack(const CartesianField& field, const LayoutDescriptor& layout) {
    if (field.nx() != layout.nx() || field.ny() != layout.ny() || field.nz() != layout.nz()) {
        throw Error(ErrorKind::InvalidArgument, "field extents differ from layout");
    }
    GroupedField out(layout);
    auto dst = out.data();
    for (std::size_t k = 0; k < field.nz(); ++k) {
        for (std::size_t j = 0; j < field.ny(); ++j) {
            for (std::size_t i = 0; i < field.nx(); ++i) {
                dst[layout.linear(i, j, k)] = field(i, j, k);
            }
        }
    }
    return out;
}

CartesianField unpack(const GroupedField& field) {
    const auto& layout = field.layout();
    CartesianField out(layout.nx(), layout.ny(), layout.nz());
    const auto src = field.data();
    for (std::size_t k = 0; k < layout.nz(); ++k) {
        for (std::size_t j = 0; j < layout.ny(); ++j) {
            for (std::size_t i = 0; i < layout.nx(); ++i) {
                out(i, j, k) = src[layout.linear(i, j, k)];
            }
        }
    }
    return out;
}

GroupedField reorder(const GroupedField& field, Direction to) {
    const auto& from = field.layout();
    if (from.direction() == to) {
        return field;
    }
    const LayoutDescriptor target = from.with_direction(to);
    GroupedField out(target);
    const auto ext = target.extents();
    const std::size_t n = target.line_length();
    const std::size_t sz = target.sz();
    const std::size_t lines = target.line_count();
    const auto src = field.data();
    auto dst = out.data();
    // Walk the destination linearly; each source point is read exactly once.
    for (std::size_t g = 0; g < target.group_count(); ++g) {
        for (std::size_t pos = 0; pos < n; ++pos) {
            for (std::size_t lane = 0; lane < sz; ++lane) {
                const std::size_t line = g * sz + lane;
                if (line >= lines) {
                    continue;
                }
                const auto c = from_line(ext, to, line, pos);
                dst[lane + sz * (pos + n * g)] = src[from.linear(c[0], c[1], c[2])];
            }
        }
    }
    return out;
}

// ───────────────── split / join ──────────────────────────────────────────

std::vector<GroupedField> split_along_direction(const GroupedField& field,
                                                std::span<const std::size_t> local_sizes) {
    const std::size_t n = field.line_length();
    std::size_t total = 0;
    for (auto s : local_sizes) {
        total += s;
    }
    if (total != n || local_sizes.empty()) {
        throw Error(ErrorKind::InvalidArgument, "local sizes do not cover the line length");
    }
    const std::size_t sz = field.sz();
    std::vector<GroupedField> pieces;
    pieces.reserve(local_sizes.size());
    std::size_t offset = 0;
    for (auto len : local_sizes) {
        GroupedField piece(field.layout().with_line_length(len));
        for (std::size_t g = 0; g < field.group_count(); ++g) {
            const auto src = field.group(g).subspan(sz * offset, sz * len);
            std::copy(src.begin(), src.end(), piece.group(g).begin());
        }
        pieces.push_back(std::move(piece));
        offset += len;
    }
    return pieces;
}

GroupedField join_along_direction(std::span<const GroupedField> pieces) {
    if (pieces.empty()) {
        throw Error(ErrorKind::InvalidArgument, "nothing to join");
    }
    std::size_t n = 0;
    for (const auto& p : pieces) {
        n += p.line_length();
    }
    const auto& first = pieces.front().layout();
    GroupedField out(first.with_line_length(n));
    const std::size_t sz = first.sz();
    std::size_t offset = 0;
    for (const auto& p : pieces) {
        if (p.layout().with_line_length(n) != out.layout()) {
            throw Error(ErrorKind::InvalidArgument, "pieces have incompatible layouts");
        }
        for (std::size_t g = 0; g < out.group_count(); ++g) {
            const auto src = p.group(g);
            std::copy(src.begin(), src.end(), out.group(g).begin() + static_cast<std::ptrdiff_t>(sz * offset));
        }
        offset += p.line_length();
    }
    return out;
}

} // namespace tds
