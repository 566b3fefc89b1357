/**
 * @file transport.hpp
 * @brief Neighbour-only messaging between ranks of a 1D decomposition.
 *
 * Ranks form a path (non-cyclic) or a ring (cyclic). A RankContext can only
 * talk to its previous and next rank; the Transport backend underneath is an
 * interface so an external message-passing layer can replace the in-process
 * queues without touching solver code.
 */

#pragma once

#include "tds/error.hpp"
#include "tds/layout.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace tds {

/// Kinds are named from the receiver's point of view: a HaloLow message fills
/// the receiver's low halo, a BoundaryHigh message carries the next rank's
/// first decoupled value.
enum class MessageKind : std::uint8_t {
    HaloLow = 0,
    HaloHigh,
    BoundaryLow,
    BoundaryHigh,
    Setup,
    Gather,
    Scatter,
};
inline constexpr std::size_t kMessageKinds = 7;

struct NeighborMessage {
    MessageKind kind = MessageKind::HaloLow;
    std::uint64_t tag = 0; ///< solve epoch of the sender
    std::vector<double> payload;
};

class Transport {
public:
    virtual ~Transport() = default;
    [[nodiscard]] virtual int rank_count() const noexcept = 0;
    virtual void send(int from, int to, NeighborMessage msg) = 0;
    /// Blocks until a message of `kind` from `from` arrives at `at`.
    virtual NeighborMessage receive(int at, int from, MessageKind kind) = 0;
    /// Wakes every blocked receiver with a RankPanic error.
    virtual void abort() noexcept = 0;
};

/// One FIFO per (sender, receiver, kind); blocking receive.
class InProcessTransport final : public Transport {
public:
    explicit InProcessTransport(int ranks);

    [[nodiscard]] int rank_count() const noexcept override { return ranks_; }
    void send(int from, int to, NeighborMessage msg) override;
    NeighborMessage receive(int at, int from, MessageKind kind) override;
    void abort() noexcept override;

private:
    struct Channel {
        std::mutex mutex;
        std::condition_variable ready;
        std::deque<NeighborMessage> queue;
    };
    Channel& channel(int from, int to, MessageKind kind);

    int ranks_;
    std::vector<std::unique_ptr<Channel>> channels_;
    std::mutex abort_mutex_;
    bool aborted_ = false;
};

enum class Side { Prev, Next };

struct TrafficCounters {
    std::uint64_t messages_sent = 0;
    std::uint64_t bytes_sent = 0;
    /// Neighbour exchange rounds (halo, boundary) this rank took part in.
    std::uint64_t rounds = 0;
};

class RankContext {
public:
    RankContext(Transport& transport, int rank, bool cyclic);

    [[nodiscard]] int rank() const noexcept { return rank_; }
    [[nodiscard]] int size() const noexcept { return transport_->rank_count(); }
    [[nodiscard]] bool cyclic() const noexcept { return cyclic_; }
    [[nodiscard]] std::optional<int> neighbor(Side side) const noexcept;
    [[nodiscard]] bool has_neighbor(Side side) const noexcept { return neighbor(side).has_value(); }

    /// Throws NoNeighbor if the side is open (path edges).
    void send(Side to, MessageKind kind, std::vector<double> payload);
    /// Throws NoNeighbor for open sides, TagMismatch if the sender's epoch differs.
    [[nodiscard]] std::vector<double> receive(Side from, MessageKind kind);

    [[nodiscard]] std::uint64_t epoch() const noexcept { return epoch_; }
    /// Starts a new solve; every subsequent message carries the new epoch.
    void advance_epoch() noexcept { ++epoch_; }
    void count_round() noexcept { ++counters_.rounds; }
    [[nodiscard]] const TrafficCounters& counters() const noexcept { return counters_; }

private:
    Transport* transport_;
    int rank_;
    bool cyclic_;
    std::uint64_t epoch_ = 0;
    TrafficCounters counters_;
};

/**
 * Runs `body` on `ranks` concurrent rank contexts sharing one in-process
 * transport and returns the per-rank results in rank order. If any body
 * throws, the transport is aborted so blocked peers unwind, and a RankPanic
 * carrying every failure message is thrown after all ranks have joined.
 */
template <typename Body>
auto spawn_ranks(int ranks, bool cyclic, Body&& body)
    -> std::vector<std::invoke_result_t<Body&, RankContext&>>;

/// Halo-extended copy of a rank-local field: `depth` extra positions below 0
/// and above n-1 in every group. Open path edges leave the halo at zero.
class HaloField {
public:
    HaloField(const GroupedField& interior, std::size_t depth);

    /// Overwrites the interior rows; halo rows keep their previous values.
    /// @throws Error InvalidArgument if the layout differs.
    void load(const GroupedField& interior);

    [[nodiscard]] const LayoutDescriptor& layout() const noexcept { return layout_; }
    [[nodiscard]] std::size_t depth() const noexcept { return depth_; }
    [[nodiscard]] std::size_t sz() const noexcept { return layout_.sz(); }
    [[nodiscard]] std::size_t line_length() const noexcept { return layout_.line_length(); }
    [[nodiscard]] std::size_t group_count() const noexcept { return layout_.group_count(); }
    /// Lanes at a position in [-depth, n + depth).
    [[nodiscard]] std::span<const double> lanes(std::size_t group, std::ptrdiff_t position) const noexcept {
        return {data_.data() + offset(group, position), sz()};
    }
    [[nodiscard]] std::span<double> lanes(std::size_t group, std::ptrdiff_t position) noexcept {
        return {data_.data() + offset(group, position), sz()};
    }
    /// Contiguous pointer to position `position` of group `group`.
    [[nodiscard]] const double* row_ptr(std::size_t group, std::ptrdiff_t position) const noexcept {
        return data_.data() + offset(group, position);
    }

private:
    [[nodiscard]] std::size_t offset(std::size_t group, std::ptrdiff_t position) const noexcept {
        const std::size_t padded = line_length() + 2 * depth_;
        return sz() * (static_cast<std::size_t>(position + static_cast<std::ptrdiff_t>(depth_)) +
                       padded * group);
    }

    LayoutDescriptor layout_;
    std::size_t depth_;
    std::vector<double> data_;
};

/// One neighbour round: the top `depth` rows go to the next rank, the bottom
/// `depth` rows to the previous rank. depth == 0 is a no-op (no round).
[[nodiscard]] HaloField exchange_halo(RankContext& ctx, const GroupedField& local, std::size_t depth);
/// Same round, refilling `halo` in place when it already has the right shape.
void exchange_halo(RankContext& ctx, const GroupedField& local, std::size_t depth, std::optional<HaloField>& halo);

struct BoundaryRemote {
    std::vector<double> prev_last;  ///< previous rank's last decoupled values (empty on open side)
    std::vector<double> next_first; ///< next rank's first decoupled values (empty on open side)
};

/// One neighbour round carrying per-line boundary values in both directions.
[[nodiscard]] BoundaryRemote exchange_boundary(RankContext& ctx, std::span<const double> d_first,
                                               std::span<const double> d_last);

struct BoundaryCoefficients {
    double prev_s_c_last = 0.0;
    double next_s_a_first = 0.0;
};

/// Setup-time exchange of the solve-invariant boundary couplings; not counted
/// as a solve round.
[[nodiscard]] BoundaryCoefficients exchange_coefficients(RankContext& ctx, double s_a_first,
                                                         double s_c_last);

/// Testing gather relayed towards rank 0 through neighbours only; rank 0 gets
/// every rank's slice concatenated in rank order, other ranks get nullopt.
[[nodiscard]] std::optional<std::vector<double>> gather_to_root(RankContext& ctx,
                                                                std::span<const double> slice);
/// Inverse relay: rank 0 provides the full vector, each rank returns its piece.
[[nodiscard]] std::vector<double> scatter_from_root(RankContext& ctx, std::span<const double> full,
                                                    std::span<const std::size_t> local_sizes);

// ───────────────── spawn_ranks implementation ────────────────────────────

template <typename Body>
auto spawn_ranks(int ranks, bool cyclic, Body&& body)
    -> std::vector<std::invoke_result_t<Body&, RankContext&>> {
    using Result = std::invoke_result_t<Body&, RankContext&>;
    if (ranks < 1) {
        throw Error(ErrorKind::InvalidArgument, "need at least one rank");
    }
    InProcessTransport transport(ranks);
    std::vector<std::optional<Result>> results(static_cast<std::size_t>(ranks));
    std::vector<std::string> failures(static_cast<std::size_t>(ranks));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(ranks));
    {
        std::vector<std::jthread> threads;
        threads.reserve(static_cast<std::size_t>(ranks));
        for (int r = 0; r < ranks; ++r) {
            threads.emplace_back([&, r] {
                const auto idx = static_cast<std::size_t>(r);
                try {
                    RankContext ctx(transport, r, cyclic);
                    results[idx].emplace(body(ctx));
                } catch (const std::exception& e) {
                    failures[idx] = e.what();
                    errors[idx] = std::current_exception();
                    transport.abort();
                } catch (...) {
                    failures[idx] = "unknown exception";
                    errors[idx] = std::current_exception();
                    transport.abort();
                }
            });
        }
    }
    std::string report;
    for (int r = 0; r < ranks; ++r) {
        if (errors[static_cast<std::size_t>(r)]) {
            report += "[rank " + std::to_string(r) + "] " + failures[static_cast<std::size_t>(r)] + "; ";
        }
    }
    if (!report.empty()) {
        throw Error(ErrorKind::RankPanic, report);
    }
    std::vector<Result> out;
    out.reserve(static_cast<std::size_t>(ranks));
    for (auto& r : results) {
        out.push_back(std::move(*r));
    }
    return out;
}

} // namespace tds
