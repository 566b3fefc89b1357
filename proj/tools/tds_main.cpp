// tds: command-line driver for the solver benchmarks, accuracy study and
// transport-equation demo. CSV goes to --out (or stdout), summaries to stderr.

#include "tds/bench.hpp"
#include "tds/error.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCorrectness = 3;

struct CliOptions {
    tds::BenchConfig cfg;
    std::optional<std::string> solver;
    std::string model = "cached";
    std::optional<std::size_t> ranks;
};

void add_common(CLI::App* sub, CliOptions& o) {
    sub->add_option("--nx", o.cfg.nx, "Grid extent along x (line length for scaling/pde)");
    sub->add_option("--ny", o.cfg.ny, "Grid extent along y");
    sub->add_option("--nz", o.cfg.nz, "Grid extent along z");
    sub->add_option("--sz", o.cfg.sz, "Lines per interleaved group");
    sub->add_option("--ranks", o.ranks, "Simulated ranks (largest P for scaling)");
    sub->add_option("--solver", o.solver, "thomas|periodic_thomas|pdd|modified_thomas|distd2");
    sub->add_option("--repeats", o.cfg.repeats, "Timed repetitions (>= 3)");
    sub->add_option("--seed", o.cfg.seed, "Seed for generated inputs");
    sub->add_option("--peak-gbps", o.cfg.peak_gbps, "Peak memory bandwidth in GB/s for pct_peak");
    sub->add_option("--out", o.cfg.out, "CSV output path (stdout if omitted)");
    sub->add_flag("--cyclic", o.cfg.cyclic, "Periodic lines / ring of ranks");
    sub->add_flag("--pad", o.cfg.pad, "Pad the last group with ghost lines instead of failing");
    sub->add_option("--model", o.model, "Movement column: cached|standard");
    sub->add_flag("--write-allocate", o.cfg.write_allocate, "Charge an extra read per write");
    sub->add_option("--n-list", o.cfg.n_list, "Line lengths to sweep (bench, accuracy)")->delimiter(',');
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty()) {
        return std::cout;
    }
    file.open(path);
    if (!file) {
        throw tds::Error(tds::ErrorKind::ConfigError, "cannot open " + path + " for writing");
    }
    return file;
}

int finish(bool correct, const std::string& message) {
    if (!correct) {
        std::cerr << "correctness check failed: " << message << '\n';
        return kExitCorrectness;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batched distributed tridiagonal solver benchmarks"};
    app.require_subcommand(1);
    CliOptions o;
    auto* bench = app.add_subcommand("bench", "Throughput sweep over line lengths at fixed total points");
    auto* scaling = app.add_subcommand("scaling", "Strong scaling of distd2 over simulated ranks");
    auto* accuracy = app.add_subcommand("accuracy", "Order-of-accuracy study, periodic Thomas vs distd2");
    auto* pde = app.add_subcommand("pde", "Transport-equation right-hand side with movement ledger");
    for (auto* sub : {bench, scaling, accuracy, pde}) {
        add_common(sub, o);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const std::string name = o.solver.value_or(scaling->parsed() ? "distd2" : "thomas");
        auto solver = tds::parse_solver(name);
        if (!solver) {
            throw tds::Error(tds::ErrorKind::ConfigError, "unknown solver '" + name + "'");
        }
        if (o.model != "cached" && o.model != "standard") {
            throw tds::Error(tds::ErrorKind::ConfigError, "--model must be cached or standard");
        }
        o.cfg.solver = *solver;
        o.cfg.cached_model = o.model == "cached";
        o.cfg.ranks = o.ranks.value_or(accuracy->parsed() ? 2 : 1);
        if (pde->parsed() && pde->get_option("--nx")->count() == 0) {
            o.cfg.nx = 16;
        }

        std::ofstream file;
        if (bench->parsed() || scaling->parsed()) {
            const bool is_scaling = scaling->parsed();
            const auto res = is_scaling ? tds::run_scaling(o.cfg) : tds::run_solver_bench(o.cfg);
            tds::write_bench_csv(open_out(o.cfg.out, file), res.records, is_scaling);
            if (!is_scaling) {
                std::vector<std::size_t> seen;
                for (const auto& r : res.records) {
                    if (std::find(seen.begin(), seen.end(), r.n) == seen.end()) {
                        seen.push_back(r.n);
                        std::cerr << r.solver << " n=" << r.n << " median s/point "
                                  << tds::format_number(tds::median_runtime_per_point(res.records, r.n)) << '\n';
                    }
                }
            }
            return finish(res.correct, res.message);
        }
        if (accuracy->parsed()) {
            const auto res = tds::run_accuracy(o.cfg);
            tds::write_accuracy_csv(open_out(o.cfg.out, file), res.records);
            if (!res.records.empty()) {
                std::cerr << "fitted order " << tds::format_number(res.records.front().order) << '\n';
            }
            return finish(res.correct, res.message);
        }
        const auto res = tds::run_pde(o.cfg);
        tds::write_pde_csv(open_out(o.cfg.out, file), res.records);
        for (auto k : {tds::TransportKernel::AbstractOffDiagonal, tds::TransportKernel::AbstractDiagonal,
                       tds::TransportKernel::Reorder, tds::TransportKernel::Accumulate}) {
            std::cerr << tds::to_string(k) << ": calls " << res.ledger.calls(k) << ", traffic "
                      << tds::format_number(res.ledger.total(k)) << '\n';
        }
        std::cerr << "total " << tds::format_number(res.ledger.total()) << ", reorder share "
                  << tds::format_number(100.0 * tds::reorder_cost_fraction(res.ledger)) << "%\n";
        return finish(res.correct, res.message);
    } catch (const tds::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
        case tds::ErrorKind::ConfigError:
        case tds::ErrorKind::InvalidArgument:
        case tds::ErrorKind::DivisibilityError: return kExitConfig;
        default: return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
