#include "tds/pde.hpp"

#include "tds/distd2.hpp"
#include "tds/error.hpp"

#include <numbers>

namespace tds {

// ───────────────── Movement accounting ───────────────────────────────────

double traffic(const Movement& m, bool write_allocate) noexcept {
    const double write_cost = write_allocate ? 2.0 : 1.0;
    return m.reads + write_cost * m.writes + 2.0 * m.read_writes;
}

std::string to_string(TransportKernel k) {
    switch (k) {
    case TransportKernel::AbstractOffDiagonal: return "abstract_offdiag";
    case TransportKernel::AbstractDiagonal: return "abstract_diag";
    case TransportKernel::Reorder: return "reorder";
    case TransportKernel::Accumulate: return "accumulate";
    }
    return "unknown";
}

MovementProfile gpu_fusion_profile() {
    MovementProfile p;
    // Decoupling + substitution phases of the three fused solves.
    p.per_call[0] = Movement{2, 3, 3} + Movement{4, 1, 0};
    p.per_call[1] = Movement{1, 3, 3} + Movement{4, 1, 0};
    p.per_call[2] = {1, 1, 0};
    p.per_call[3] = {1, 0, 1};
    p.write_allocate = false;
    return p;
}

MovementProfile cpu_blocking_profile() {
    MovementProfile p;
    p.per_call[0] = Movement{2, 3, 0} + Movement{3, 0, 1};
    p.per_call[1] = Movement{1, 3, 0} + Movement{3, 0, 1};
    p.per_call[2] = {1, 1, 0};
    p.per_call[3] = {1, 0, 1};
    p.write_allocate = true;
    return p;
}

void MovementLedger::record(TransportKernel kernel, std::size_t distinct_inputs) {
    calls_[idx(kernel)] += 1;
    inputs_[idx(kernel)] += distinct_inputs;
}

std::uint64_t MovementLedger::calls(TransportKernel k) const noexcept { return calls_[idx(k)]; }

std::uint64_t MovementLedger::inputs_read(TransportKernel k) const noexcept { return inputs_[idx(k)]; }

double MovementLedger::total(TransportKernel k) const noexcept {
    return static_cast<double>(calls_[idx(k)]) * traffic(profile_.per_call[idx(k)], profile_.write_allocate);
}

double MovementLedger::total() const noexcept {
    double t = 0.0;
    for (std::size_t k = 0; k < kTransportKernels; ++k) {
        t += total(static_cast<TransportKernel>(k));
    }
    return t;
}

bool MovementLedger::empty() const noexcept {
    for (auto c : calls_) {
        if (c != 0) {
            return false;
        }
    }
    return true;
}

double reorder_cost_fraction(const MovementLedger& ledger) noexcept {
    const double t = ledger.total();
    return t > 0.0 ? ledger.total(TransportKernel::Reorder) / t : 0.0;
}

// ───────────────── Fields ────────────────────────────────────────────────

VelocityField make_velocity_field(std::size_t n, std::size_t sz, double nu,
                                  const std::array<std::function<double(double, double, double)>, 3>& init) {
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
    const LayoutDescriptor layout(n, n, n, sz, Direction::X);
    VelocityField out{{GroupedField(layout), GroupedField(layout), GroupedField(layout)}, nu, h};
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < n; ++i) {
                    out.u[c].at(i, j, k) = init[c](static_cast<double>(i) * h, static_cast<double>(j) * h,
                                                   static_cast<double>(k) * h);
                }
            }
        }
    }
    return out;
}

void accumulate(GroupedField& into, const GroupedField& from) {
    const auto& a = into.layout();
    const auto& b = from.layout();
    if (a.extents() != b.extents()) {
        throw Error(ErrorKind::InvalidArgument, "accumulate needs fields on the same grid");
    }
    for (std::size_t k = 0; k < a.nz(); ++k) {
        for (std::size_t j = 0; j < a.ny(); ++j) {
            for (std::size_t i = 0; i < a.nx(); ++i) {
                into.at(i, j, k) += from.at(i, j, k);
            }
        }
    }
}

// ───────────────── Kernels ───────────────────────────────────────────────

namespace {

inline double combine(double uj, double d_ui, double d_prod, double d2_ui, double nu) noexcept {
    return -0.5 * (uj * d_ui + d_prod) + nu * d2_ui;
}

} // namespace

GroupedField directional_contribution(std::size_t i, Direction j, const std::array<GroupedField, 3>& fields,
                                      double nu, double h, MovementLedger* ledger, std::size_t ranks) {
    const auto jj = static_cast<std::size_t>(j);
    if (i > 2) {
        throw Error(ErrorKind::InvalidArgument, "velocity component out of range");
    }
    const GroupedField& ui = fields[i];
    const GroupedField& uj = fields[jj];
    if (ui.layout().direction() != j || uj.layout() != ui.layout()) {
        throw Error(ErrorKind::InvalidArgument, "fields must be laid out along the derivative direction");
    }
    const std::size_t n = ui.line_length();
    const auto first = assemble(sixth_order_first_derivative(h), n, true);
    const auto second = assemble(second_derivative_scheme(h), n, true);

    GroupedField prod(ui.layout());
    {
        const auto a = ui.data();
        const auto b = uj.data();
        auto p = prod.data();
        for (std::size_t q = 0; q < p.size(); ++q) {
            p[q] = a[q] * b[q];
        }
    }
    const auto part = SubdomainPartition::even(n, ranks);
    const auto ui_parts = split_along_direction(ui, part.local_sizes());
    const auto uj_parts = split_along_direction(uj, part.local_sizes());
    const auto prod_parts = split_along_direction(prod, part.local_sizes());

    auto pieces = spawn_ranks(static_cast<int>(part.rank_count()), true, [&](RankContext& ctx) {
        const auto r = static_cast<std::size_t>(ctx.rank());
        const Distd2Plan plan1 = make_distd2_plan(ctx, first.system, first.stencil, part);
        const Distd2Plan plan2 = make_distd2_plan(ctx, second.system, second.stencil, part);
        GroupedField d_ui = distd2_solve(ctx, ui_parts[r], plan1);
        const GroupedField d_prod = distd2_solve(ctx, prod_parts[r], plan1);
        const GroupedField d2_ui = distd2_solve(ctx, ui_parts[r], plan2);
        const auto vel = uj_parts[r].data();
        const auto dp = d_prod.data();
        const auto dd = d2_ui.data();
        auto out = d_ui.data();
        for (std::size_t q = 0; q < out.size(); ++q) {
            out[q] = combine(vel[q], out[q], dp[q], dd[q], nu);
        }
        return d_ui;
    });
    if (ledger) {
        ledger->record(i == jj ? TransportKernel::AbstractDiagonal : TransportKernel::AbstractOffDiagonal,
                       i == jj ? 1 : 2);
    }
    return join_along_direction(pieces);
}

std::array<GroupedField, 3> evaluate_transport_rhs(const VelocityField& fields, MovementLedger* ledger,
                                                   std::size_t ranks) {
    if (fields.layout().direction() != Direction::X) {
        throw Error(ErrorKind::InvalidArgument, "transport inputs must be in x-layout");
    }
    const auto& fx = fields.u;
    std::array<GroupedField, 3> rhs{directional_contribution(0, Direction::X, fx, fields.nu, fields.h, ledger, ranks),
                                    directional_contribution(1, Direction::X, fx, fields.nu, fields.h, ledger, ranks),
                                    directional_contribution(2, Direction::X, fx, fields.nu, fields.h, ledger, ranks)};

    auto reorder_all = [&](const std::array<GroupedField, 3>& in, Direction to) {
        std::array<GroupedField, 3> out{reorder(in[0], to), reorder(in[1], to), reorder(in[2], to)};
        if (ledger) {
            for (int c = 0; c < 3; ++c) {
                ledger->record(TransportKernel::Reorder, 1);
            }
        }
        return out;
    };
    auto sweep = [&](const std::array<GroupedField, 3>& in, Direction d) {
        for (std::size_t c = 0; c < 3; ++c) {
            accumulate(rhs[c], directional_contribution(c, d, in, fields.nu, fields.h, ledger, ranks));
            if (ledger) {
                ledger->record(TransportKernel::Accumulate, 1);
            }
        }
    };
    const auto fy = reorder_all(fx, Direction::Y);
    sweep(fy, Direction::Y);
    const auto fz = reorder_all(fy, Direction::Z);
    sweep(fz, Direction::Z);
    return rhs;
}

std::array<CartesianField, 3> reference_transport_rhs(const std::array<CartesianField, 3>& u, double nu,
                                                      double h) {
    const std::size_t nx = u[0].nx(), ny = u[0].ny(), nz = u[0].nz();
    std::array<CartesianField, 3> out{CartesianField(nx, ny, nz), CartesianField(nx, ny, nz),
                                      CartesianField(nx, ny, nz)};
    const std::array<std::size_t, 3> ext{nx, ny, nz};
    for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t n = ext[j];
        const auto first = assemble(sixth_order_first_derivative(h), n, true);
        const auto second = assemble(second_derivative_scheme(h), n, true);
        const PeriodicThomasFactor f1(first.system);
        const PeriodicThomasFactor f2(second.system);
        // The two transverse axes, enumerated in any order.
        const std::size_t t0 = (j + 1) % 3, t1 = (j + 2) % 3;
        std::vector<double> ui(n), uj(n), prod(n);
        for (std::size_t b = 0; b < ext[t1]; ++b) {
            for (std::size_t a = 0; a < ext[t0]; ++a) {
                auto at = [&](const CartesianField& f, std::size_t p) {
                    std::array<std::size_t, 3> idx{};
                    idx[j] = p;
                    idx[t0] = a;
                    idx[t1] = b;
                    return f(idx[0], idx[1], idx[2]);
                };
                for (std::size_t i = 0; i < 3; ++i) {
                    for (std::size_t p = 0; p < n; ++p) {
                        ui[p] = at(u[i], p);
                        uj[p] = at(u[j], p);
                        prod[p] = ui[p] * uj[p];
                    }
                    auto d_ui = first.stencil.apply(ui, true);
                    auto d_prod = first.stencil.apply(prod, true);
                    auto d2_ui = second.stencil.apply(ui, true);
                    f1.solve(d_ui);
                    f1.solve(d_prod);
                    f2.solve(d2_ui);
                    for (std::size_t p = 0; p < n; ++p) {
                        std::array<std::size_t, 3> idx{};
                        idx[j] = p;
                        idx[t0] = a;
                        idx[t1] = b;
                        out[i](idx[0], idx[1], idx[2]) += combine(uj[p], d_ui[p], d_prod[p], d2_ui[p], nu);
                    }
                }
            }
        }
    }
    return out;
}

VelocityField euler_step(const VelocityField& fields, double dt, std::size_t ranks) {
    const auto rhs = evaluate_transport_rhs(fields, nullptr, ranks);
    VelocityField out = fields;
    for (std::size_t c = 0; c < 3; ++c) {
        auto u = out.u[c].data();
        const auto r = rhs[c].data();
        for (std::size_t q = 0; q < u.size(); ++q) {
            u[q] += dt * r[q];
        }
    }
    return out;
}

} // namespace tds
