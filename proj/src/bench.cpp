#include "tds/bench.hpp"

#include "tds/distd2.hpp"
#include "tds/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace tds {

// ───────────────── Solver names and movement ─────────────────────────────

std::string to_string(SolverKind s) {
    switch (s) {
    case SolverKind::Thomas: return "thomas";
    case SolverKind::PeriodicThomas: return "periodic_thomas";
    case SolverKind::Pdd: return "pdd";
    case SolverKind::ModifiedThomas: return "modified_thomas";
    case SolverKind::DistD2: return "distd2";
    }
    return "unknown";
}

std::optional<SolverKind> parse_solver(const std::string& name) {
    for (auto s : {SolverKind::Thomas, SolverKind::PeriodicThomas, SolverKind::Pdd, SolverKind::ModifiedThomas,
                   SolverKind::DistD2}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    return std::nullopt;
}

std::vector<SolverMovementRow> solver_movement_table() {
    return {
        {"distd2_decoupling", {1, 1, 1}, {1, 1, 0}},
        {"distd2_substitution", {0, 0, 1}, {0, 0, 1}},
        {"thomas", {1, 1, 1}, {1, 1, 0}},
        {"periodic_thomas", {1, 1, 2}, {1, 1, 0}},
    };
}

Movement solver_movement(SolverKind s, bool cached) {
    const auto table = solver_movement_table();
    auto pick = [cached](const SolverMovementRow& r) { return cached ? r.cached : r.standard; };
    switch (s) {
    case SolverKind::Thomas: return pick(table[2]);
    case SolverKind::PeriodicThomas: return pick(table[3]);
    case SolverKind::DistD2:
    case SolverKind::Pdd:
    case SolverKind::ModifiedThomas: return pick(table[0]) + pick(table[1]);
    }
    return {};
}

double bytes_per_point(SolverKind s, bool cached, bool write_allocate) {
    return traffic(solver_movement(s, cached), write_allocate) * sizeof(double);
}

void validate(const BenchConfig& cfg) {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::ConfigError, m); };
    if (cfg.nx == 0 || cfg.ny == 0 || cfg.nz == 0) {
        fail("extents must be positive");
    }
    if (cfg.sz == 0) {
        fail("--sz must be positive");
    }
    if (cfg.ranks == 0) {
        fail("--ranks must be positive");
    }
    if (cfg.repeats < 3) {
        fail("--repeats must be at least 3");
    }
    if (!(cfg.peak_gbps >= 0.0) || !std::isfinite(cfg.peak_gbps)) {
        fail("--peak-gbps must be a non-negative number");
    }
    for (auto n : cfg.n_list) {
        if (n < 5) {
            fail("line lengths must be at least 5");
        }
    }
}

// ───────────────── Shared helpers ────────────────────────────────────────

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

GroupedField random_field(const LayoutDescriptor& layout, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    CartesianField f(layout.nx(), layout.ny(), layout.nz());
    for (auto& v : f.data()) {
        v = dist(rng);
    }
    return pack(f, layout);
}

LayoutDescriptor line_layout(std::size_t n, std::size_t total, const BenchConfig& cfg) {
    if (total % n != 0) {
        throw Error(ErrorKind::ConfigError,
                    "line length " + std::to_string(n) + " does not divide " + std::to_string(total) + " points");
    }
    try {
        return {n, total / n, 1, cfg.sz, Direction::X, cfg.pad};
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }
}

std::vector<double> line_of(const GroupedField& f, std::size_t line) {
    const std::size_t sz = f.sz();
    std::vector<double> out(f.line_length());
    for (std::size_t p = 0; p < out.size(); ++p) {
        out[p] = f.lanes(line / sz, p)[line % sz];
    }
    return out;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

double relative_residual(const TridiagonalSystem& sys, std::span<const double> u, std::span<const double> d) {
    const auto au = sys.multiply(u);
    double r = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        r = std::max(r, std::abs(au[i] - d[i]));
    }
    const double scale = max_abs(d);
    return scale > 0.0 ? r / scale : r;
}

double max_dropped(const TridiagonalSystem& global, const SubdomainPartition& part) {
    double m = 0.0;
    const auto ranks = static_cast<int>(part.rank_count());
    for (int p = 0; p < ranks; ++p) {
        const auto idx = static_cast<std::size_t>(p);
        const auto c = preprocess(global.slice(part.offset(idx), part.local_size(idx)), position_of(p, ranks),
                                  global.periodic());
        m = std::max(m, c.dropped_coupling());
    }
    return m;
}

struct Distd2Timing {
    std::vector<double> runtimes; ///< per repeat, slowest rank
    std::uint64_t rounds = 0;     ///< per solve, largest over ranks
    GroupedField solution;
};

Distd2Timing time_distd2(const CompactOperator& op, const GroupedField& field, std::size_t ranks,
                         std::size_t repeats) {
    const auto part = SubdomainPartition::even(field.line_length(), ranks);
    const auto pieces = split_along_direction(field, part.local_sizes());
    struct RankRun {
        std::vector<double> times;
        std::uint64_t rounds;
        GroupedField solution;
    };
    auto runs = spawn_ranks(static_cast<int>(ranks), op.system.periodic(), [&](RankContext& ctx) {
        const Distd2Plan plan = make_distd2_plan(ctx, op.system, op.stencil, part);
        const auto& mine = pieces[static_cast<std::size_t>(ctx.rank())];
        std::vector<double> times;
        std::uint64_t rounds = 0;
        Distd2Workspace ws;
        for (std::size_t r = 0; r < repeats; ++r) {
            const auto before = ctx.counters().rounds;
            const auto t0 = Clock::now();
            distd2_solve(ctx, mine, plan, ws);
            times.push_back(seconds_since(t0));
            rounds = std::max(rounds, ctx.counters().rounds - before);
        }
        return RankRun{std::move(times), rounds, std::move(*ws.solution)};
    });
    Distd2Timing out{std::vector<double>(repeats, 0.0), 0, field};
    std::vector<GroupedField> solved;
    for (auto& run : runs) {
        for (std::size_t r = 0; r < repeats; ++r) {
            out.runtimes[r] = std::max(out.runtimes[r], run.times[r]);
        }
        out.rounds = std::max(out.rounds, run.rounds);
        solved.push_back(std::move(run.solution));
    }
    out.solution = join_along_direction(solved);
    return out;
}

CompactOperator bench_operator(SolverKind s, std::size_t n, bool cyclic) {
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
    const bool periodic = s == SolverKind::PeriodicThomas || (s == SolverKind::DistD2 && cyclic);
    return assemble(sixth_order_first_derivative(h), n, periodic);
}

RhsBatch lines_to_batch(const GroupedField& f) {
    const std::size_t lines = f.layout().line_count();
    const std::size_t n = f.line_length();
    RhsBatch b(lines, n);
    for (std::size_t t = 0; t < lines; ++t) {
        const auto v = line_of(f, t);
        std::copy(v.begin(), v.end(), b.row(t).begin());
    }
    return b;
}

void fill_rates(BenchRecord& r, const BenchConfig& cfg) {
    r.achieved_gbps = r.runtime_s > 0.0
                          ? r.bytes_per_point * static_cast<double>(r.points) / r.runtime_s / 1e9
                          : std::numeric_limits<double>::quiet_NaN();
    r.pct_peak = cfg.peak_gbps > 0.0 ? 100.0 * r.achieved_gbps / cfg.peak_gbps
                                     : std::numeric_limits<double>::quiet_NaN();
}

void flag_peak(BenchOutcome& out) {
    for (const auto& r : out.records) {
        if (r.pct_peak > 110.0) {
            out.correct = false;
            out.message = "achieved bandwidth is " + format_number(r.pct_peak) +
                          "% of the given peak (above 110%); check the movement model or --peak-gbps";
            return;
        }
    }
}

} // namespace

// ───────────────── Throughput sweep ──────────────────────────────────────

BenchOutcome run_solver_bench(const BenchConfig& cfg) {
    validate(cfg);
    BenchOutcome out;
    std::vector<std::size_t> n_list = cfg.n_list;
    if (n_list.empty()) {
        for (std::size_t n = 32; n <= 8192; n *= 2) {
            n_list.push_back(n);
        }
    }
    const std::size_t total = cfg.nx * cfg.ny * cfg.nz;
    const double bpp = bytes_per_point(cfg.solver, cfg.cached_model, cfg.write_allocate);

    for (const std::size_t n : n_list) {
        const LayoutDescriptor layout = line_layout(n, total, cfg);
        const GroupedField input = random_field(layout, cfg.seed + n);
        const CompactOperator op = bench_operator(cfg.solver, n, cfg.cyclic);
        const std::size_t points = layout.point_count();
        std::vector<double> runtimes;
        double check = 0.0;
        double tolerance = 1e-12;

        switch (cfg.solver) {
        case SolverKind::Thomas:
        case SolverKind::PeriodicThomas: {
            const bool periodic = cfg.solver == SolverKind::PeriodicThomas;
            std::optional<ThomasFactor> tf;
            std::optional<PeriodicThomasFactor> pf;
            if (periodic) {
                pf.emplace(op.system);
            } else {
                tf.emplace(op.system);
            }
            GroupedField work = input;
            for (std::size_t r = 0; r < cfg.repeats; ++r) {
                work = input;
                const auto t0 = Clock::now();
                for (std::size_t g = 0; g < work.group_count(); ++g) {
                    if (periodic) {
                        pf->solve_lanes(work.group(g), work.sz());
                    } else {
                        tf->solve_lanes(work.group(g), work.sz());
                    }
                }
                runtimes.push_back(seconds_since(t0));
            }
            check = relative_residual(op.system, line_of(work, 0), line_of(input, 0));
            break;
        }
        case SolverKind::Pdd:
        case SolverKind::ModifiedThomas: {
            if (n / cfg.ranks < 4) {
                throw Error(ErrorKind::ConfigError, "each subdomain needs at least 4 points");
            }
            const auto part = SubdomainPartition::even(n, cfg.ranks);
            const RhsBatch batch = lines_to_batch(input);
            std::optional<RhsBatch> sol;
            for (std::size_t r = 0; r < cfg.repeats; ++r) {
                const auto t0 = Clock::now();
                if (cfg.solver == SolverKind::Pdd) {
                    PddResult res = [&] {
                        try {
                            return pdd_solve(op.system, batch, part);
                        } catch (const Error& e) {
                            if (e.kind() == ErrorKind::TruncationUnsafe) {
                                throw Error(ErrorKind::ConfigError, e.what());
                            }
                            throw;
                        }
                    }();
                    runtimes.push_back(seconds_since(t0));
                    tolerance = std::max(1e-10, 10.0 * res.max_dropped);
                    sol.emplace(std::move(res.solution));
                } else {
                    sol.emplace(modified_thomas_solve(op.system, batch, part));
                    runtimes.push_back(seconds_since(t0));
                    tolerance = 1e-10;
                }
            }
            check = relative_residual(op.system, sol->row(0), batch.row(0));
            break;
        }
        case SolverKind::DistD2: {
            if (n / cfg.ranks < 4) {
                throw Error(ErrorKind::ConfigError, "each subdomain needs at least 4 points");
            }
            const auto timing = time_distd2(op, input, cfg.ranks, cfg.repeats);
            runtimes = timing.runtimes;
            const auto part = SubdomainPartition::even(n, cfg.ranks);
            tolerance = std::max(1e-10, 100.0 * max_dropped(op.system, part));
            // Residual against the stencil right-hand side of line 0.
            const auto u0 = line_of(input, 0);
            check = relative_residual(op.system, line_of(timing.solution, 0), op.stencil.apply(u0, op.system.periodic()));
            break;
        }
        }
        if (!(check <= tolerance)) {
            out.correct = false;
            out.message = to_string(cfg.solver) + " at n=" + std::to_string(n) + ": relative residual " +
                          format_number(check) + " exceeds " + format_number(tolerance);
        }
        for (std::size_t r = 0; r < runtimes.size(); ++r) {
            BenchRecord rec;
            rec.solver = to_string(cfg.solver);
            rec.n = n;
            rec.sz = cfg.sz;
            rec.ranks = cfg.ranks;
            rec.repeat = r;
            rec.runtime_s = runtimes[r];
            rec.points = points;
            rec.bytes_per_point = bpp;
            fill_rates(rec, cfg);
            out.records.push_back(rec);
        }
    }
    if (out.correct) {
        flag_peak(out);
    }
    return out;
}

// ───────────────── Strong scaling ────────────────────────────────────────

BenchOutcome run_scaling(const BenchConfig& cfg) {
    validate(cfg);
    if (cfg.solver != SolverKind::DistD2) {
        throw Error(ErrorKind::ConfigError, "scaling runs the distd2 solver only");
    }
    std::vector<std::size_t> rank_list;
    for (std::size_t p = 1; p < cfg.ranks; p *= 2) {
        rank_list.push_back(p);
    }
    rank_list.push_back(cfg.ranks);
    const std::size_t n = cfg.nx;
    if (n / cfg.ranks < 4) {
        throw Error(ErrorKind::ConfigError, "each subdomain needs at least 4 points");
    }
    LayoutDescriptor layout = [&]() -> LayoutDescriptor {
        try {
            return {cfg.nx, cfg.ny, cfg.nz, cfg.sz, Direction::X, cfg.pad};
        } catch (const Error& e) {
            throw Error(ErrorKind::ConfigError, e.what());
        }
    }();
    const GroupedField input = random_field(layout, cfg.seed);
    const CompactOperator op = bench_operator(SolverKind::DistD2, n, cfg.cyclic);
    const double bpp = bytes_per_point(SolverKind::DistD2, cfg.cached_model, cfg.write_allocate);

    BenchOutcome out;
    double baseline = 0.0;
    for (const std::size_t p : rank_list) {
        const auto timing = time_distd2(op, input, p, cfg.repeats);
        const double med = median(timing.runtimes);
        if (p == 1) {
            baseline = med;
        }
        if (timing.rounds != 2) {
            out.correct = false;
            out.message = "P=" + std::to_string(p) + " used " + std::to_string(timing.rounds) + " rounds per solve";
        }
        for (std::size_t r = 0; r < timing.runtimes.size(); ++r) {
            BenchRecord rec;
            rec.solver = "distd2";
            rec.n = n;
            rec.sz = cfg.sz;
            rec.ranks = p;
            rec.repeat = r;
            rec.runtime_s = timing.runtimes[r];
            rec.points = layout.point_count();
            rec.bytes_per_point = bpp;
            fill_rates(rec, cfg);
            rec.efficiency = baseline / (static_cast<double>(p) * timing.runtimes[r]);
            rec.rounds = timing.rounds;
            out.records.push_back(rec);
        }
    }
    if (out.correct) {
        flag_peak(out);
    }
    return out;
}

double median_runtime_per_point(const std::vector<BenchRecord>& records, std::size_t n) {
    std::vector<double> v;
    for (const auto& r : records) {
        if (r.n == n && r.points > 0) {
            v.push_back(r.runtime_s / static_cast<double>(r.points));
        }
    }
    return median(std::move(v));
}

// ───────────────── Accuracy ──────────────────────────────────────────────

AccuracyOutcome run_accuracy(const BenchConfig& cfg) {
    validate(cfg);
    std::vector<std::size_t> n_list = cfg.n_list;
    if (n_list.empty()) {
        n_list = {32, 64, 128, 256};
    }
    for (auto n : n_list) {
        if (n / cfg.ranks < 4) {
            throw Error(ErrorKind::ConfigError, "each subdomain needs at least 4 points");
        }
    }
    AccuracyOutcome out;
    const auto thomas = order_of_accuracy(sixth_order_first_derivative, DerivativeSolver::Thomas, n_list);
    const auto dist = order_of_accuracy(sixth_order_first_derivative, DerivativeSolver::DistD2, n_list, cfg.ranks);
    for (std::size_t k = 0; k < n_list.size(); ++k) {
        out.records.push_back({"periodic_thomas", 1, n_list[k], thomas.error[k], thomas.slope, 0.0});
    }
    for (std::size_t k = 0; k < n_list.size(); ++k) {
        const std::size_t n = n_list[k];
        const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
        const auto op = assemble(sixth_order_first_derivative(h), n, true);
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = std::sin(static_cast<double>(i) * h);
        }
        const auto a = differentiate(op, u, DerivativeSolver::Thomas);
        const auto b = differentiate(op, u, DerivativeSolver::DistD2, cfg.ranks);
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diff = std::max(diff, std::abs(a[i] - b[i]));
        }
        out.records.push_back({"distd2", cfg.ranks, n, dist.error[k], dist.slope, diff});
        const double bound =
            std::max(1e-14, 10.0 * max_dropped(op.system, SubdomainPartition::even(n, cfg.ranks)) * max_abs(a));
        if (!(diff <= bound)) {
            out.correct = false;
            out.message = "distd2 differs from periodic Thomas by " + format_number(diff) + " at n=" +
                          std::to_string(n) + " (bound " + format_number(bound) + ")";
        }
    }
    if (!(std::abs(thomas.slope - 6.0) <= 0.2)) {
        out.correct = false;
        out.message = "fitted order " + format_number(thomas.slope) + " outside 6 +- 0.2";
    }
    return out;
}

// ───────────────── PDE ───────────────────────────────────────────────────

PdeOutcome run_pde(const BenchConfig& cfg) {
    validate(cfg);
    const std::size_t n = cfg.nx;
    if (n / cfg.ranks < 4 || n < 5) {
        throw Error(ErrorKind::ConfigError, "each subdomain needs at least 4 points");
    }
    if ((n * n) % cfg.sz != 0) {
        throw Error(ErrorKind::ConfigError, "--sz must divide nx*nx for the transport box");
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double p0 = phase(rng), p1 = phase(rng), p2 = phase(rng);
    const VelocityField fields = make_velocity_field(
        n, cfg.sz, 0.01,
        {[=](double x, double y, double z) { return std::sin(x + p0) * std::cos(y) * std::cos(z); },
         [=](double x, double y, double z) { return std::cos(x) * std::sin(y + p1) * std::cos(z); },
         [=](double x, double y, double z) { return std::cos(x) * std::cos(y) * std::sin(2.0 * z + p2); }});

    const MovementProfile profile = cfg.write_allocate ? cpu_blocking_profile() : gpu_fusion_profile();
    PdeOutcome out{{}, MovementLedger(profile), true, {}};
    std::optional<std::array<GroupedField, 3>> rhs;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        MovementLedger ledger(profile);
        const auto t0 = Clock::now();
        rhs.emplace(evaluate_transport_rhs(fields, &ledger, cfg.ranks));
        const double t = seconds_since(t0);
        if (r == 0) {
            out.ledger = ledger;
        }
        PdeRecord rec;
        rec.n = n;
        rec.sz = cfg.sz;
        rec.ranks = cfg.ranks;
        rec.repeat = r;
        rec.runtime_s = t;
        rec.points = n * n * n;
        rec.ledger_total = ledger.total();
        rec.reorder_fraction = reorder_cost_fraction(ledger);
        out.records.push_back(rec);
    }

    const std::array<CartesianField, 3> cart{unpack(fields.u[0]), unpack(fields.u[1]), unpack(fields.u[2])};
    const auto ref = reference_transport_rhs(cart, fields.nu, fields.h);
    double diff = 0.0, scale = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        const auto mine = unpack((*rhs)[c]);
        for (std::size_t q = 0; q < mine.data().size(); ++q) {
            diff = std::max(diff, std::abs(mine.data()[q] - ref[c].data()[q]));
            scale = std::max(scale, std::abs(ref[c].data()[q]));
        }
    }
    const double rel = scale > 0.0 ? diff / scale : diff;
    const double h = fields.h;
    const auto part = SubdomainPartition::even(n, cfg.ranks);
    const double dropped = std::max(max_dropped(assemble(sixth_order_first_derivative(h), n, true).system, part),
                                    max_dropped(assemble(second_derivative_scheme(h), n, true).system, part));
    const double tolerance = std::max(1e-12, 100.0 * dropped);
    const bool ok = rel <= tolerance;
    for (auto& rec : out.records) {
        rec.fused_rel_diff = rel;
        rec.fused_ok = ok;
    }
    if (!ok) {
        out.correct = false;
        out.message = "fused pipeline differs from the Cartesian reference by " + format_number(rel) +
                      " (tolerance " + format_number(tolerance) + ")";
    }
    return out;
}

// ───────────────── CSV ───────────────────────────────────────────────────

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) {
        out.push_back(cur);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_double(const std::string& s) {
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error(ErrorKind::ConfigError, "bad number '" + s + "' in CSV");
    }
    return v;
}

std::uint64_t parse_uint(const std::string& s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error(ErrorKind::ConfigError, "bad integer '" + s + "' in CSV");
    }
    return v;
}

std::vector<std::vector<std::string>> read_table(std::istream& is, const std::string& header) {
    std::string line;
    if (!std::getline(is, line) || line != header) {
        throw Error(ErrorKind::ConfigError, "unexpected CSV header '" + line + "'");
    }
    const std::size_t cols = split_csv(header).size();
    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        auto fields = split_csv(line);
        if (fields.size() != cols) {
            throw Error(ErrorKind::ConfigError, "CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                                                    std::to_string(cols));
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace

std::string bench_csv_header(bool scaling) {
    std::string h = "solver,n,sz,P,repeat,runtime_s,points,bytes_per_point,achieved_gbps,pct_peak";
    if (scaling) {
        h += ",efficiency,rounds";
    }
    return h;
}

std::string to_csv_row(const BenchRecord& r, bool scaling) {
    std::string s = r.solver + "," + std::to_string(r.n) + "," + std::to_string(r.sz) + "," +
                    std::to_string(r.ranks) + "," + std::to_string(r.repeat) + "," + format_number(r.runtime_s) + "," +
                    std::to_string(r.points) + "," + format_number(r.bytes_per_point) + "," +
                    format_number(r.achieved_gbps) + "," + format_number(r.pct_peak);
    if (scaling) {
        s += "," + format_number(r.efficiency) + "," + std::to_string(r.rounds);
    }
    return s;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records, bool scaling) {
    os << bench_csv_header(scaling) << '\n';
    for (const auto& r : records) {
        os << to_csv_row(r, scaling) << '\n';
    }
}

std::vector<BenchRecord> parse_bench_csv(std::istream& is) {
    std::string first;
    if (!std::getline(is, first)) {
        throw Error(ErrorKind::ConfigError, "empty CSV");
    }
    const bool scaling = first == bench_csv_header(true);
    std::istringstream rest;
    std::ostringstream buf;
    buf << first << '\n' << is.rdbuf();
    rest.str(buf.str());
    std::vector<BenchRecord> out;
    for (const auto& f : read_table(rest, bench_csv_header(scaling))) {
        BenchRecord r;
        r.solver = f[0];
        r.n = parse_uint(f[1]);
        r.sz = parse_uint(f[2]);
        r.ranks = parse_uint(f[3]);
        r.repeat = parse_uint(f[4]);
        r.runtime_s = parse_double(f[5]);
        r.points = parse_uint(f[6]);
        r.bytes_per_point = parse_double(f[7]);
        r.achieved_gbps = parse_double(f[8]);
        r.pct_peak = parse_double(f[9]);
        if (scaling) {
            r.efficiency = parse_double(f[10]);
            r.rounds = parse_uint(f[11]);
        }
        out.push_back(r);
    }
    return out;
}

std::string accuracy_csv_header() { return "solver,P,n,max_error,order,diff_vs_thomas"; }

void write_accuracy_csv(std::ostream& os, const std::vector<AccuracyRecord>& records) {
    os << accuracy_csv_header() << '\n';
    for (const auto& r : records) {
        os << r.solver << ',' << r.ranks << ',' << r.n << ',' << format_number(r.max_error) << ','
           << format_number(r.order) << ',' << format_number(r.diff_vs_thomas) << '\n';
    }
}

std::vector<AccuracyRecord> parse_accuracy_csv(std::istream& is) {
    std::vector<AccuracyRecord> out;
    for (const auto& f : read_table(is, accuracy_csv_header())) {
        out.push_back({f[0], parse_uint(f[1]), parse_uint(f[2]), parse_double(f[3]), parse_double(f[4]),
                       parse_double(f[5])});
    }
    return out;
}

std::string pde_csv_header() {
    return "n,sz,P,repeat,runtime_s,points,ledger_total,reorder_fraction,fused_rel_diff,fused_ok";
}

void write_pde_csv(std::ostream& os, const std::vector<PdeRecord>& records) {
    os << pde_csv_header() << '\n';
    for (const auto& r : records) {
        os << r.n << ',' << r.sz << ',' << r.ranks << ',' << r.repeat << ',' << format_number(r.runtime_s) << ','
           << r.points << ',' << format_number(r.ledger_total) << ',' << format_number(r.reorder_fraction) << ','
           << format_number(r.fused_rel_diff) << ',' << (r.fused_ok ? 1 : 0) << '\n';
    }
}

} // namespace tds
