/**
 * @file bench.hpp
 * @brief Benchmark drivers, data-movement accounting and CSV records behind the `tds` CLI.
 */

#pragma once

#include "tds/pde.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tds {

enum class SolverKind { Thomas, PeriodicThomas, Pdd, ModifiedThomas, DistD2 };

[[nodiscard]] std::string to_string(SolverKind s);
/// Accepts thomas, periodic_thomas, pdd, modified_thomas, distd2.
[[nodiscard]] std::optional<SolverKind> parse_solver(const std::string& name);

/// Per-point field traffic of one solver phase, standard and cached variants.
struct SolverMovementRow {
    std::string name;
    Movement standard;
    Movement cached;
};

/// Decoupling, substitution, Thomas and periodic Thomas rows.
[[nodiscard]] std::vector<SolverMovementRow> solver_movement_table();
/// Whole-solve movement (DistD2 = decoupling + substitution). PDD and the
/// modified Thomas solver are charged like DistD2: a local elimination pass
/// followed by an in-place correction pass.
[[nodiscard]] Movement solver_movement(SolverKind s, bool cached);
[[nodiscard]] double bytes_per_point(SolverKind s, bool cached, bool write_allocate);

struct BenchConfig {
    std::size_t nx = 256;
    std::size_t ny = 64;
    std::size_t nz = 64;
    std::size_t sz = kDefaultGroupWidth;
    std::size_t ranks = 1;
    SolverKind solver = SolverKind::Thomas;
    std::size_t repeats = 3;
    std::uint64_t seed = 1;
    double peak_gbps = 0.0; ///< 0 leaves pct_peak empty
    std::string out;
    bool cyclic = false;
    bool pad = false;
    bool cached_model = true;
    bool write_allocate = false;
    std::vector<std::size_t> n_list; ///< bench sweep; empty means 32..8192
};

/// @throws Error ConfigError describing the first invalid setting.
void validate(const BenchConfig& cfg);

struct BenchRecord {
    std::string solver;
    std::size_t n = 0;
    std::size_t sz = 0;
    std::size_t ranks = 1;
    std::size_t repeat = 0;
    double runtime_s = 0.0;
    std::size_t points = 0;
    double bytes_per_point = 0.0;
    double achieved_gbps = 0.0;
    double pct_peak = 0.0; ///< NaN when no peak was given
    // scaling only
    double efficiency = 0.0;
    std::uint64_t rounds = 0;
};

struct BenchOutcome {
    std::vector<BenchRecord> records;
    bool correct = true;
    std::string message; ///< correctness or sanity failure description
};

/// Line-length sweep at fixed total point count (nx * ny * nz).
[[nodiscard]] BenchOutcome run_solver_bench(const BenchConfig& cfg);
/// Fixed global problem over P = 1, 2, 4, ... cfg.ranks simulated ranks.
[[nodiscard]] BenchOutcome run_scaling(const BenchConfig& cfg);

/// Median of runtime_s / points over the records with line length n.
[[nodiscard]] double median_runtime_per_point(const std::vector<BenchRecord>& records, std::size_t n);

struct AccuracyRecord {
    std::string solver;
    std::size_t ranks = 1;
    std::size_t n = 0;
    double max_error = 0.0;
    double order = 0.0;        ///< fitted over the whole sweep, repeated per row
    double diff_vs_thomas = 0.0;
};

struct AccuracyOutcome {
    std::vector<AccuracyRecord> records;
    bool correct = true;
    std::string message;
};

/// Periodic sine study over n = 32..256 for periodic Thomas and DistD2.
[[nodiscard]] AccuracyOutcome run_accuracy(const BenchConfig& cfg);

struct PdeRecord {
    std::size_t n = 0;
    std::size_t sz = 0;
    std::size_t ranks = 1;
    std::size_t repeat = 0;
    double runtime_s = 0.0;
    std::size_t points = 0;
    double ledger_total = 0.0;
    double reorder_fraction = 0.0;
    double fused_rel_diff = 0.0;
    bool fused_ok = false;
};

struct PdeOutcome {
    std::vector<PdeRecord> records;
    MovementLedger ledger;
    bool correct = true;
    std::string message;
};

/// Transport right-hand side on an nx^3 box with ledger and reference check.
[[nodiscard]] PdeOutcome run_pde(const BenchConfig& cfg);

// ───────────────── CSV ───────────────────────────────────────────────────

/// Shortest round-trip decimal, independent of the C/C++ locale.
[[nodiscard]] std::string format_number(double v);

[[nodiscard]] std::string bench_csv_header(bool scaling);
[[nodiscard]] std::string to_csv_row(const BenchRecord& r, bool scaling);
void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records, bool scaling);
/// @throws Error ConfigError on a header or field mismatch.
[[nodiscard]] std::vector<BenchRecord> parse_bench_csv(std::istream& is);

[[nodiscard]] std::string accuracy_csv_header();
void write_accuracy_csv(std::ostream& os, const std::vector<AccuracyRecord>& records);
[[nodiscard]] std::vector<AccuracyRecord> parse_accuracy_csv(std::istream& is);

[[nodiscard]] std::string pde_csv_header();
void write_pde_csv(std::ostream& os, const std::vector<PdeRecord>& records);

} // namespace tds
