/**
 * @file layout.hpp
 * @brief SZ-grouped line storage and the direction reorder kernels.
 *
 * A grid of nx*ny*nz points solved along one direction is viewed as a batch of
 * independent lines. Lines are bundled into groups of SZ; inside a group the
 * j-th entries of all SZ lines sit next to each other, so a forward or
 * backward sweep advances SZ lines in lockstep over contiguous memory:
 *
 *     linear(lane, position, group) = lane + sz * position + sz * n * group
 *
 * Transverse enumeration (which line goes to which lane/group) takes the
 * faster-varying Cartesian axis first: (j, k) with j fastest for X lines,
 * (i, k) with i fastest for Y lines, (i, j) with i fastest for Z lines.
 */

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace tds {

enum class Direction { X = 0, Y = 1, Z = 2 };

/// Default group width: 8 doubles fill a 512-bit vector register.
inline constexpr std::size_t kDefaultGroupWidth = 8;

struct PackedIndex {
    std::size_t lane;
    std::size_t position;
    std::size_t group;

    friend bool operator==(const PackedIndex&, const PackedIndex&) = default;
};

class LayoutDescriptor {
public:
    /// Throws DivisibilityError when the transverse line count is not a
    /// multiple of sz and padding is off. With padding the last group is
    /// completed with zero ghost lines.
    LayoutDescriptor(std::size_t nx, std::size_t ny, std::size_t nz, std::size_t sz,
                     Direction direction, bool pad = false);

    [[nodiscard]] std::size_t nx() const noexcept { return extents_[0]; }
    [[nodiscard]] std::size_t ny() const noexcept { return extents_[1]; }
    [[nodiscard]] std::size_t nz() const noexcept { return extents_[2]; }
    [[nodiscard]] std::array<std::size_t, 3> extents() const noexcept { return extents_; }
    [[nodiscard]] std::size_t sz() const noexcept { return sz_; }
    [[nodiscard]] Direction direction() const noexcept { return direction_; }
    [[nodiscard]] bool padded() const noexcept { return pad_; }

    /// Points per line (extent along the solve direction).
    [[nodiscard]] std::size_t line_length() const noexcept;
    /// Real (non-ghost) lines.
    [[nodiscard]] std::size_t line_count() const noexcept;
    [[nodiscard]] std::size_t group_count() const noexcept;
    [[nodiscard]] std::size_t point_count() const noexcept { return nx() * ny() * nz(); }
    /// sz * line_length * group_count; equals point_count unless padded.
    [[nodiscard]] std::size_t storage_size() const noexcept;

    [[nodiscard]] PackedIndex cartesian_to_packed(std::size_t i, std::size_t j, std::size_t k) const;
    /// Inverse of cartesian_to_packed; throws OutOfBounds for ghost lanes.
    [[nodiscard]] std::array<std::size_t, 3> packed_to_cartesian(const PackedIndex& p) const;
    [[nodiscard]] std::size_t linear(const PackedIndex& p) const noexcept {
        return p.lane + sz_ * (p.position + line_length() * p.group);
    }
    [[nodiscard]] std::size_t linear(std::size_t i, std::size_t j, std::size_t k) const {
        return linear(cartesian_to_packed(i, j, k));
    }

    [[nodiscard]] LayoutDescriptor with_direction(Direction d) const;
    /// Same sz/direction/padding, different extent along the solve direction.
    [[nodiscard]] LayoutDescriptor with_line_length(std::size_t n) const;

    friend bool operator==(const LayoutDescriptor&, const LayoutDescriptor&) = default;

private:
    std::array<std::size_t, 3> extents_;
    std::size_t sz_;
    Direction direction_;
    bool pad_;
};

/// Plain x-fastest storage: index i + nx * (j + ny * k).
class CartesianField {
public:
    CartesianField(std::size_t nx, std::size_t ny, std::size_t nz);
    CartesianField(std::size_t nx, std::size_t ny, std::size_t nz, std::vector<double> data);

    [[nodiscard]] std::size_t nx() const noexcept { return nx_; }
    [[nodiscard]] std::size_t ny() const noexcept { return ny_; }
    [[nodiscard]] std::size_t nz() const noexcept { return nz_; }
    [[nodiscard]] double& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
        return data_[i + nx_ * (j + ny_ * k)];
    }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return data_[i + nx_ * (j + ny_ * k)];
    }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const CartesianField&, const CartesianField&) = default;

private:
    std::size_t nx_, ny_, nz_;
    std::vector<double> data_;
};

class GroupedField {
public:
    explicit GroupedField(const LayoutDescriptor& layout);
    GroupedField(const LayoutDescriptor& layout, std::vector<double> data);

    [[nodiscard]] const LayoutDescriptor& layout() const noexcept { return layout_; }
    [[nodiscard]] std::size_t sz() const noexcept { return layout_.sz(); }
    [[nodiscard]] std::size_t line_length() const noexcept { return layout_.line_length(); }
    [[nodiscard]] std::size_t group_count() const noexcept { return layout_.group_count(); }

    /// The sz lane values at one position of one group.
    [[nodiscard]] std::span<double> lanes(std::size_t group, std::size_t position) noexcept {
        return {data_.data() + sz() * (position + line_length() * group), sz()};
    }
    [[nodiscard]] std::span<const double> lanes(std::size_t group, std::size_t position) const noexcept {
        return {data_.data() + sz() * (position + line_length() * group), sz()};
    }
    /// Contiguous sz * n block of one group.
    [[nodiscard]] std::span<double> group(std::size_t g) noexcept {
        return {data_.data() + sz() * line_length() * g, sz() * line_length()};
    }
    [[nodiscard]] std::span<const double> group(std::size_t g) const noexcept {
        return {data_.data() + sz() * line_length() * g, sz() * line_length()};
    }
    [[nodiscard]] double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[layout_.linear(i, j, k)];
    }
    [[nodiscard]] double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[layout_.linear(i, j, k)];
    }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const GroupedField&, const GroupedField&) = default;

private:
    LayoutDescriptor layout_;
    std::vector<double> data_;
};

[[nodiscard]] GroupedField pack(const CartesianField& field, const LayoutDescriptor& layout);
/// Ghost lanes of a padded layout are dropped.
[[nodiscard]] CartesianField unpack(const GroupedField& field);
/// One read and one write per point; ghost lanes of the result are zero.
[[nodiscard]] GroupedField reorder(const GroupedField& field, Direction to);

/// Cuts a field into consecutive pieces along its solve direction, one per
/// subdomain. Each piece is itself a GroupedField over the local extents.
[[nodiscard]] std::vector<GroupedField> split_along_direction(const GroupedField& field,
                                                              std::span<const std::size_t> local_sizes);
/// Inverse of split_along_direction.
[[nodiscard]] GroupedField join_along_direction(std::span<const GroupedField> pieces);

} // namespace tds
