/**
 * @file pde.hpp
 * @brief Skew-symmetric momentum transport right-hand side on a periodic box.
 *
 * For each velocity component i and direction j the abstract kernel computes
 *
 *     RHS_j^{u_i} = -1/2 (u_j du_i/dx_j + d(u_j u_i)/dx_j) + nu d2u_i/dx_j2
 *
 * with compact derivatives solved by the distributed solver along x_j. The
 * x-direction kernels run on the x-layout fields; the fields are then
 * reordered to y, the y kernels run and their results are accumulated into
 * the x-layout outputs, and the same again for z.
 */

#pragma once

#include "tds/compact_fd.hpp"
#include "tds/layout.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tds {

struct VelocityField {
    std::array<GroupedField, 3> u; ///< u, v, w sharing one layout
    double nu = 0.0;
    double h = 1.0;

    [[nodiscard]] const LayoutDescriptor& layout() const noexcept { return u[0].layout(); }
};

/// Field-sized reads, writes and read-writes of one kernel call.
struct Movement {
    double reads = 0.0;
    double writes = 0.0;
    double read_writes = 0.0;

    friend Movement operator+(const Movement& x, const Movement& y) noexcept {
        return {x.reads + y.reads, x.writes + y.writes, x.read_writes + y.read_writes};
    }
    friend Movement operator*(double k, const Movement& m) noexcept {
        return {k * m.reads, k * m.writes, k * m.read_writes};
    }
    friend bool operator==(const Movement&, const Movement&) = default;
};

/// Field traversals a kernel costs. A read-write counts as one read plus one
/// write; with write-allocate caches every write also costs a read.
[[nodiscard]] double traffic(const Movement& m, bool write_allocate) noexcept;

enum class TransportKernel { AbstractOffDiagonal, AbstractDiagonal, Reorder, Accumulate };
inline constexpr std::size_t kTransportKernels = 4;
[[nodiscard]] std::string to_string(TransportKernel k);

/// Per-call movement of every kernel for one implementation strategy.
struct MovementProfile {
    std::array<Movement, kTransportKernels> per_call;
    bool write_allocate = false;
};

/// Fully fused kernels, no write-allocate (decoupling + substitution phases summed).
[[nodiscard]] MovementProfile gpu_fusion_profile();
/// Cache-blocked kernels on a write-allocate CPU.
[[nodiscard]] MovementProfile cpu_blocking_profile();

class MovementLedger {
public:
    explicit MovementLedger(MovementProfile profile = gpu_fusion_profile()) : profile_(profile) {}

    /// One call of `kernel` that read `distinct_inputs` input fields.
    void record(TransportKernel kernel, std::size_t distinct_inputs = 0);

    [[nodiscard]] const MovementProfile& profile() const noexcept { return profile_; }
    [[nodiscard]] std::uint64_t calls(TransportKernel k) const noexcept;
    [[nodiscard]] std::uint64_t inputs_read(TransportKernel k) const noexcept;
    [[nodiscard]] double total(TransportKernel k) const noexcept;
    [[nodiscard]] double total() const noexcept;
    [[nodiscard]] bool empty() const noexcept;

private:
    static std::size_t idx(TransportKernel k) noexcept { return static_cast<std::size_t>(k); }

    MovementProfile profile_;
    std::array<std::uint64_t, kTransportKernels> calls_{};
    std::array<std::uint64_t, kTransportKernels> inputs_{};
};

/// Share of the total traffic spent on reorders; 0 for an empty ledger.
[[nodiscard]] double reorder_cost_fraction(const MovementLedger& ledger) noexcept;

/// Periodic box of n^3 points over [0, 2pi)^3 in x-layout.
[[nodiscard]] VelocityField make_velocity_field(std::size_t n, std::size_t sz, double nu,
                                                const std::array<std::function<double(double, double, double)>, 3>& init);

/**
 * @brief One abstract kernel: component i, derivative direction j.
 *
 * `fields` must be laid out along j. Lines are split over `ranks` subdomains
 * along j. The result is in the same layout.
 */
[[nodiscard]] GroupedField directional_contribution(std::size_t i, Direction j, const std::array<GroupedField, 3>& fields,
                                                    double nu, double h, MovementLedger* ledger = nullptr,
                                                    std::size_t ranks = 1);

/// into(x, y, z) += from(x, y, z) for every point; layouts may differ in direction.
void accumulate(GroupedField& into, const GroupedField& from);

/// All three components of the transport right-hand side, x-layout in and out.
[[nodiscard]] std::array<GroupedField, 3> evaluate_transport_rhs(const VelocityField& fields,
                                                                 MovementLedger* ledger = nullptr,
                                                                 std::size_t ranks = 1);

/// Term-by-term evaluation on plain Cartesian arrays with periodic Thomas.
[[nodiscard]] std::array<CartesianField, 3> reference_transport_rhs(const std::array<CartesianField, 3>& u,
                                                                    double nu, double h);

/// u + dt * RHS(u); smoke-test time integration.
[[nodiscard]] VelocityField euler_step(const VelocityField& fields, double dt, std::size_t ranks = 1);

} // namespace tds
