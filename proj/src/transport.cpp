#include "tds/transport.hpp"

#include <algorithm>

namespace tds {

// ───────────────── InProcessTransport ────────────────────────────────────

InProcessTransport::InProcessTransport(int ranks) : ranks_(ranks) {
    if (ranks < 1) {
        throw Error(ErrorKind::InvalidArgument, "need at least one rank");
    }
    const auto count = static_cast<std::size_t>(ranks) * static_cast<std::size_t>(ranks) * kMessageKinds;
    channels_.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
        channels_.push_back(std::make_unique<Channel>());
    }
}

InProcessTransport::Channel& InProcessTransport::channel(int from, int to, MessageKind kind) {
    if (from < 0 || from >= ranks_ || to < 0 || to >= ranks_) {
        throw Error(ErrorKind::OutOfBounds, "rank id outside communicator");
    }
    const auto idx = (static_cast<std::size_t>(from) * static_cast<std::size_t>(ranks_) +
                      static_cast<std::size_t>(to)) *
                         kMessageKinds +
                     static_cast<std::size_t>(kind);
    return *channels_[idx];
}

void InProcessTransport::send(int from, int to, NeighborMessage msg) {
    auto& ch = channel(from, to, msg.kind);
    {
        std::lock_guard lock(ch.mutex);
        ch.queue.push_back(std::move(msg));
    }
    ch.ready.notify_one();
}

NeighborMessage InProcessTransport::receive(int at, int from, MessageKind kind) {
    auto& ch = channel(from, at, kind);
    std::unique_lock lock(ch.mutex);
    for (;;) {
        if (!ch.queue.empty()) {
            NeighborMessage msg = std::move(ch.queue.front());
            ch.queue.pop_front();
            return msg;
        }
        {
            std::lock_guard abort_lock(abort_mutex_);
            if (aborted_) {
                throw Error(ErrorKind::RankPanic, "transport aborted while rank " + std::to_string(at) +
                                                      " waited on rank " + std::to_string(from));
            }
        }
        ch.ready.wait_for(lock, std::chrono::milliseconds(20));
    }
}

void InProcessTransport::abort() noexcept {
    {
        std::lock_guard lock(abort_mutex_);
        aborted_ = true;
    }
    for (auto& ch : channels_) {
        ch->ready.notify_all();
    }
}

// ───────────────── RankContext ───────────────────────────────────────────

RankContext::RankContext(Transport& transport, int rank, bool cyclic)
    : transport_(&transport), rank_(rank), cyclic_(cyclic) {
    if (rank < 0 || rank >= transport.rank_count()) {
        throw Error(ErrorKind::OutOfBounds, "rank id outside communicator");
    }
}

std::optional<int> RankContext::neighbor(Side side) const noexcept {
    const int p = size();
    if (side == Side::Prev) {
        if (rank_ > 0) {
            return rank_ - 1;
        }
        return cyclic_ ? std::optional<int>(p - 1) : std::nullopt;
    }
    if (rank_ + 1 < p) {
        return rank_ + 1;
    }
    return cyclic_ ? std::optional<int>(0) : std::nullopt;
}

void RankContext::send(Side to, MessageKind kind, std::vector<double> payload) {
    const auto dst = neighbor(to);
    if (!dst) {
        throw Error(ErrorKind::NoNeighbor, "rank " + std::to_string(rank_) + " has no " +
                                               (to == Side::Prev ? "previous" : "next") + " neighbour");
    }
    counters_.messages_sent += 1;
    counters_.bytes_sent += payload.size() * sizeof(double);
    transport_->send(rank_, *dst, NeighborMessage{kind, epoch_, std::move(payload)});
}

std::vector<double> RankContext::receive(Side from, MessageKind kind) {
    const auto src = neighbor(from);
    if (!src) {
        throw Error(ErrorKind::NoNeighbor, "rank " + std::to_string(rank_) + " has no " +
                                               (from == Side::Prev ? "previous" : "next") + " neighbour");
    }
    NeighborMessage msg = transport_->receive(rank_, *src, kind);
    if (msg.tag != epoch_) {
        throw Error(ErrorKind::TagMismatch, "rank " + std::to_string(rank_) + " expected epoch " +
                                                std::to_string(epoch_) + ", got " + std::to_string(msg.tag));
    }
    return std::move(msg.payload);
}

// ───────────────── Halo ──────────────────────────────────────────────────

HaloField::HaloField(const GroupedField& interior, std::size_t depth)
    : layout_(interior.layout()), depth_(depth),
      data_(interior.sz() * (interior.line_length() + 2 * depth) * interior.group_count(), 0.0) {
    load(interior);
}

void HaloField::load(const GroupedField& interior) {
    if (!(interior.layout() == layout_)) {
        throw Error(ErrorKind::InvalidArgument, "halo field layout differs from the interior");
    }
    for (std::size_t g = 0; g < group_count(); ++g) {
        const auto src = interior.group(g);
        std::copy(src.begin(), src.end(), data_.begin() + static_cast<std::ptrdiff_t>(offset(g, 0)));
    }
}

namespace {

std::vector<double> pack_rows(const GroupedField& f, std::size_t first, std::size_t count) {
    const std::size_t sz = f.sz();
    std::vector<double> out;
    out.reserve(sz * count * f.group_count());
    for (std::size_t g = 0; g < f.group_count(); ++g) {
        const auto src = f.group(g).subspan(sz * first, sz * count);
        out.insert(out.end(), src.begin(), src.end());
    }
    return out;
}

void unpack_rows(HaloField& h, std::span<const double> payload, std::ptrdiff_t first, std::size_t count) {
    const std::size_t sz = h.sz();
    if (payload.size() != sz * count * h.group_count()) {
        throw Error(ErrorKind::InvalidArgument, "halo payload size mismatch");
    }
    auto it = payload.begin();
    for (std::size_t g = 0; g < h.group_count(); ++g) {
        for (std::size_t r = 0; r < count; ++r) {
            auto dst = h.lanes(g, first + static_cast<std::ptrdiff_t>(r));
            std::copy(it, it + static_cast<std::ptrdiff_t>(sz), dst.begin());
            it += static_cast<std::ptrdiff_t>(sz);
        }
    }
}

} // namespace

HaloField exchange_halo(RankContext& ctx, const GroupedField& local, std::size_t depth) {
    std::optional<HaloField> out;
    exchange_halo(ctx, local, depth, out);
    return std::move(*out);
}

void exchange_halo(RankContext& ctx, const GroupedField& local, std::size_t depth, std::optional<HaloField>& halo) {
    const std::size_t n = local.line_length();
    if (depth > n) {
        throw Error(ErrorKind::InvalidArgument, "halo depth exceeds local line length");
    }
    if (halo && halo->depth() == depth && halo->layout() == local.layout()) {
        halo->load(local);
    } else {
        halo.emplace(local, depth);
    }
    if (depth == 0) {
        return;
    }
    ctx.count_round();
    if (ctx.has_neighbor(Side::Next)) {
        ctx.send(Side::Next, MessageKind::HaloLow, pack_rows(local, n - depth, depth));
    }
    if (ctx.has_neighbor(Side::Prev)) {
        ctx.send(Side::Prev, MessageKind::HaloHigh, pack_rows(local, 0, depth));
    }
    if (ctx.has_neighbor(Side::Prev)) {
        unpack_rows(*halo, ctx.receive(Side::Prev, MessageKind::HaloLow), -static_cast<std::ptrdiff_t>(depth),
                    depth);
    }
    if (ctx.has_neighbor(Side::Next)) {
        unpack_rows(*halo, ctx.receive(Side::Next, MessageKind::HaloHigh), static_cast<std::ptrdiff_t>(n), depth);
    }
}

BoundaryRemote exchange_boundary(RankContext& ctx, std::span<const double> d_first,
                                 std::span<const double> d_last) {
    if (d_first.size() != d_last.size()) {
        throw Error(ErrorKind::InvalidArgument, "boundary value counts differ");
    }
    ctx.count_round();
    if (ctx.has_neighbor(Side::Next)) {
        ctx.send(Side::Next, MessageKind::BoundaryLow, {d_last.begin(), d_last.end()});
    }
    if (ctx.has_neighbor(Side::Prev)) {
        ctx.send(Side::Prev, MessageKind::BoundaryHigh, {d_first.begin(), d_first.end()});
    }
    BoundaryRemote out;
    if (ctx.has_neighbor(Side::Prev)) {
        out.prev_last = ctx.receive(Side::Prev, MessageKind::BoundaryLow);
        if (out.prev_last.size() != d_first.size()) {
            throw Error(ErrorKind::InvalidArgument, "boundary payload size mismatch");
        }
    }
    if (ctx.has_neighbor(Side::Next)) {
        out.next_first = ctx.receive(Side::Next, MessageKind::BoundaryHigh);
        if (out.next_first.size() != d_first.size()) {
            throw Error(ErrorKind::InvalidArgument, "boundary payload size mismatch");
        }
    }
    return out;
}

BoundaryCoefficients exchange_coefficients(RankContext& ctx, double s_a_first, double s_c_last) {
    // Same two-value payload both ways, so ring sizes 1 and 2 stay unambiguous.
    const std::vector<double> mine{s_a_first, s_c_last};
    if (ctx.has_neighbor(Side::Next)) {
        ctx.send(Side::Next, MessageKind::Setup, mine);
    }
    if (ctx.has_neighbor(Side::Prev)) {
        ctx.send(Side::Prev, MessageKind::Setup, mine);
    }
    BoundaryCoefficients out;
    if (ctx.has_neighbor(Side::Prev)) {
        out.prev_s_c_last = ctx.receive(Side::Prev, MessageKind::Setup).at(1);
    }
    if (ctx.has_neighbor(Side::Next)) {
        out.next_s_a_first = ctx.receive(Side::Next, MessageKind::Setup).at(0);
    }
    return out;
}

// ───────────────── Testing gather / scatter ──────────────────────────────

std::optional<std::vector<double>> gather_to_root(RankContext& ctx, std::span<const double> slice) {
    std::vector<double> acc(slice.begin(), slice.end());
    if (ctx.rank() + 1 < ctx.size()) {
        auto tail = ctx.receive(Side::Next, MessageKind::Gather);
        acc.insert(acc.end(), tail.begin(), tail.end());
    }
    if (ctx.rank() == 0) {
        return acc;
    }
    ctx.send(Side::Prev, MessageKind::Gather, std::move(acc));
    return std::nullopt;
}

std::vector<double> scatter_from_root(RankContext& ctx, std::span<const double> full,
                                      std::span<const std::size_t> local_sizes) {
    if (local_sizes.size() != static_cast<std::size_t>(ctx.size())) {
        throw Error(ErrorKind::InvalidArgument, "one local size per rank required");
    }
    std::vector<double> incoming;
    if (ctx.rank() == 0) {
        incoming.assign(full.begin(), full.end());
    } else {
        incoming = ctx.receive(Side::Prev, MessageKind::Scatter);
    }
    const std::size_t mine = local_sizes[static_cast<std::size_t>(ctx.rank())];
    if (incoming.size() < mine) {
        throw Error(ErrorKind::InvalidArgument, "scatter payload shorter than local size");
    }
    std::vector<double> local(incoming.begin(), incoming.begin() + static_cast<std::ptrdiff_t>(mine));
    if (ctx.rank() + 1 < ctx.size()) {
        ctx.send(Side::Next, MessageKind::Scatter,
                 std::vector<double>(incoming.begin() + static_cast<std::ptrdiff_t>(mine), incoming.end()));
    }
    return local;
}

} // namespace tds
