#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "codetree/attractor.hpp"
#include "codetree/config.hpp"
#include "codetree/errors.hpp"
#include "codetree/examples.hpp"
#include "codetree/io.hpp"
#include "codetree/pressure.hpp"
#include "codetree/util.hpp"
#include "codetree/version.hpp"

using namespace codetree;

namespace {

struct Loaded {
    RunConfig rc;
    std::optional<NamedExample> fixture;
};

Loaded load_config(const std::string& arg) {
    Loaded lc;
    if (arg.rfind("example:", 0) == 0) {
        NamedExample ex = example_catalog(arg.substr(8));
        lc.rc = ex.config;
        lc.fixture = std::move(ex);
    } else {
        lc.rc = parse_config(read_file(arg));
    }
    return lc;
}

std::vector<double> parse_grid(const std::string& spec) {
    try {
        auto c1 = spec.find(':');
        if (c1 == std::string::npos) return {std::stod(spec)};
        auto c2 = spec.find(':', c1 + 1);
        if (c2 == std::string::npos)
            throw ConfigError("alpha grid must be LO:HI:STEP, got '" + spec + "'");
        double lo = std::stod(spec.substr(0, c1));
        double hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
        double step = std::stod(spec.substr(c2 + 1));
        if (!(step > 0.0) || hi < lo)
            throw ConfigError("alpha grid needs LO <= HI and STEP > 0");
        auto n = (std::size_t)std::floor((hi - lo) / step + 1e-9) + 1;
        if (n > 10000) throw ConfigError("alpha grid has more than 10000 points");
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = lo + (double)i * step;
        return out;
    } catch (const std::invalid_argument&) {
        throw ConfigError("alpha grid '" + spec + "' is not numeric");
    } catch (const std::out_of_range&) {
        throw ConfigError("alpha grid '" + spec + "' is out of range");
    }
}

std::vector<std::size_t> parse_depths(const std::string& spec) {
    try {
        std::vector<std::size_t> out;
        auto dots = spec.find("..");
        if (dots != std::string::npos) {
            std::size_t lo = std::stoull(spec.substr(0, dots));
            std::size_t hi = std::stoull(spec.substr(dots + 2));
            if (lo < 1 || hi < lo)
                throw ConfigError("depth range needs 1 <= LO <= HI, got '" + spec + "'");
            if (hi - lo >= 100000) throw ConfigError("depth range too long");
            for (std::size_t k = lo; k <= hi; ++k) out.push_back(k);
            return out;
        }
        std::size_t start = 0;
        for (;;) {
            auto comma = spec.find(',', start);
            std::string tok = comma == std::string::npos
                                  ? spec.substr(start)
                                  : spec.substr(start, comma - start);
            out.push_back(std::stoull(tok));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (out[i] < 1) throw ConfigError("depths must be >= 1");
            if (i > 0 && out[i] <= out[i - 1])
                throw ConfigError("depths must be strictly increasing");
        }
        return out;
    } catch (const std::invalid_argument&) {
        throw ConfigError("depths '" + spec + "' is not numeric");
    } catch (const std::out_of_range&) {
        throw ConfigError("depths '" + spec + "' is out of range");
    }
}

std::vector<double> parse_scales(const std::string& spec) {
    try {
        std::vector<double> out;
        std::size_t start = 0;
        for (;;) {
            auto comma = spec.find(',', start);
            std::string tok = comma == std::string::npos
                                  ? spec.substr(start)
                                  : spec.substr(start, comma - start);
            out.push_back(std::stod(tok));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    } catch (const std::exception&) {
        throw ConfigError("scales '" + spec + "' is not a comma list of numbers");
    }
}

TranslationAssignment resolve_translation(const Loaded& lc, const std::string& spec,
                                          std::uint64_t master) {
    const Catalog& cat = lc.rc.catalog;
    if (spec.empty()) {
        if (lc.fixture) return lc.fixture->translations;
        throw ConfigError("render needs --translation for file-based configs; "
                          "use sample:RHO[:SEED] or per-slot vectors "
                          "\"x1,y1;x2,y2;...\"");
    }
    if (spec.rfind("sample:", 0) == 0) {
        std::string rest = spec.substr(7);
        auto colon = rest.find(':');
        try {
            double rho = std::stod(colon == std::string::npos ? rest
                                                              : rest.substr(0, colon));
            std::uint64_t s = colon == std::string::npos
                                  ? master
                                  : std::stoull(rest.substr(colon + 1));
            return sample_translation(cat, rho, s);
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("--translation sample spec must be sample:RHO[:SEED]");
        }
    }
    TranslationAssignment ta;
    ta.dimension = cat.dimension;
    std::size_t start = 0;
    try {
        for (;;) {
            auto semi = spec.find(';', start);
            std::string group = semi == std::string::npos
                                    ? spec.substr(start)
                                    : spec.substr(start, semi - start);
            Vec v = Vec::zero(cat.dimension);
            std::size_t gs = 0;
            int comp = 0;
            for (;;) {
                auto comma = group.find(',', gs);
                std::string tok = comma == std::string::npos
                                      ? group.substr(gs)
                                      : group.substr(gs, comma - gs);
                if (comp >= cat.dimension)
                    throw ConfigError("translation vector has more than " +
                                      std::to_string(cat.dimension) + " components");
                v[comp++] = std::stod(tok);
                if (comma == std::string::npos) break;
                gs = comma + 1;
            }
            if (comp != cat.dimension)
                throw ConfigError("translation vector needs " +
                                  std::to_string(cat.dimension) + " components");
            ta.a.push_back(v);
            if (semi == std::string::npos) break;
            start = semi + 1;
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("--translation '" + spec + "' is not numeric");
    }
    ta.validate(cat);
    return ta;
}

template <class T>
std::string join_values(const std::vector<T>& xs) {
    std::string s;
    for (const auto& x : xs) {
        if (!s.empty()) s += " ";
        if constexpr (std::is_same_v<T, double>)
            s += format_double(x);
        else
            s += std::to_string(x);
    }
    return s;
}

struct PressureArgs {
    std::string config, grid = "0:2:0.1", depths = "1..12", out;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int cmd_pressure(const PressureArgs& a) {
    Loaded lc = load_config(a.config);
    std::vector<double> alphas = parse_grid(a.grid);
    std::vector<std::size_t> depths = parse_depths(a.depths);
    std::uint64_t master = a.seed_given ? a.seed : lc.rc.generator.seed;
    auto tree = make_factory(lc.rc)(master);
    PressureCurve curve = pressure_curve(*tree, alphas, depths);
    std::vector<CurveRow> rows;
    rows.reserve(alphas.size() * depths.size());
    for (std::size_t ai = 0; ai < alphas.size(); ++ai)
        for (std::size_t ki = 0; ki < depths.size(); ++ki) {
            double v = curve.at(ai, ki);
            rows.push_back({alphas[ai], depths[ki], v, v, v, 0.0});
        }
    std::string cmd = "pressure " + a.config + " --alpha-grid " + a.grid +
                      " --depths " + a.depths;
    write_file(a.out, curve_csv(rows, config_hash(lc.rc), master, cmd));
    std::printf("wrote %s (%zu rows)\n", a.out.c_str(), rows.size());
    return 0;
}

struct DimzeroArgs {
    std::string config, mode = "exact", depths = "auto", out;
    std::size_t trials = 2000, necks = 1000;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int cmd_dimzero(const DimzeroArgs& a) {
    Loaded lc = load_config(a.config);
    std::uint64_t master = a.seed_given ? a.seed : lc.rc.generator.seed;
    double hint = alpha_max_hint(lc.rc.catalog);
    std::string report;

    if (a.mode == "exact") {
        auto tree = make_factory(lc.rc)(master);
        std::vector<std::size_t> grid;
        if (a.depths == "auto") {
            if (lc.rc.catalog.family_count() == 1 && lc.rc.catalog.all_similitudes()) {
                // one similitude family repeats a single level profile, so
                // log S(k)/k is depth-independent and a short grid is exact
                grid = {1, 2, 4, 8};
            } else if (tree->structured() && lc.rc.catalog.all_similitudes()) {
                std::size_t p = 1;
                for (int j = 0; j < 10; ++j) grid.push_back(p *= 4);
            } else {
                double lim = std::log(5e5) /
                             std::log((double)std::max(2, lc.rc.catalog.max_branching()));
                auto kmax = (std::size_t)std::max(2.0, lim);
                for (std::size_t k = 1; k <= kmax; k *= 2) grid.push_back(k);
            }
        } else {
            grid = parse_depths(a.depths);
        }
        auto proxy = [&](double alpha) { return pressure_estimates(*tree, alpha, grid); };
        AlphaZero zi = zero_of_pressure(
            [&](double x) { return proxy(x).p_inf_hat; }, hint);
        AlphaZero zs = zero_of_pressure(
            [&](double x) { return proxy(x).p_sup_hat; }, hint);
        bool converged = std::fabs(zi.alpha - zs.alpha) <= 0.01;
        report += "mode = exact\n";
        report += "depths = " + join_values(grid) + "\n";
        report += "p_inf_zero = " + format_double(zi.alpha) + "\n";
        report += "p_sup_zero = " + format_double(zs.alpha) + "\n";
        report += std::string("converged = ") + (converged ? "yes" : "no") + "\n";
        if (converged) {
            std::size_t kd = grid.back();
            AlphaZero z = zero_of_pressure(
                [&](double x) { return log_partition_sum(*tree, x, kd) / (double)kd; },
                hint);
            report += "alpha_zero = " + format_double(z.alpha) + "\n";
            report += "residual = " + format_double(std::fabs(z.residual)) + "\n";
        } else {
            report += "flag: pressure does not converge; reporting both proxy zeros\n";
        }
    } else if (a.mode == "montecarlo") {
        TreeFactory factory = make_factory(lc.rc);
        FrozenKingman frozen(factory, a.trials, a.necks, master);
        AlphaZero z = zero_of_pressure(
            [&](double x) { return frozen.evaluate(x).mean; }, hint);
        double h = 0.02;
        double lo = std::max(0.0, z.alpha - h);
        double slope = (frozen.evaluate(z.alpha + h).mean - frozen.evaluate(lo).mean) /
                       (z.alpha + h - lo);
        double denom = std::max(std::fabs(slope), 1e-9);
        MonteCarloEstimate at = frozen.evaluate(z.alpha);
        report += "mode = montecarlo\n";
        report += "trials = " + std::to_string(a.trials) + "\n";
        report += "necks = " + std::to_string(a.necks) + "\n";
        report += "alpha_zero = " + format_double(z.alpha) + "\n";
        report += "residual = " + format_double(std::fabs(z.residual)) + "\n";
        report += "stat_error = " + format_double(at.std_error / denom) + "\n";
        report += "syst_error = " + format_double(at.systematic / denom) + "\n";
    } else {
        throw ConfigError("--mode must be exact or montecarlo, got '" + a.mode + "'");
    }

    std::fputs(report.c_str(), stdout);
    if (!a.out.empty()) {
        std::string cmd = "dimzero " + a.config + " --mode " + a.mode;
        write_file(a.out, file_header(config_hash(lc.rc), master, cmd) + report);
    }
    return 0;
}

struct RenderArgs {
    std::string config, translation, format = "csv", out;
    std::size_t depth = 0, pixels = 512, sample = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int cmd_render(const RenderArgs& a) {
    Loaded lc = load_config(a.config);
    std::uint64_t master = a.seed_given ? a.seed : lc.rc.generator.seed;
    auto tree = make_factory(lc.rc)(master);
    TranslationAssignment ta = resolve_translation(lc, a.translation, master);
    PointCloud cloud = a.sample > 0
                           ? sampled_point_cloud(*tree, ta, a.depth, a.sample, master)
                           : point_cloud(*tree, ta, a.depth);
    std::uint64_t hash = config_hash(lc.rc);
    if (a.format == "csv") {
        std::string cmd = "render " + a.config + " --depth " + std::to_string(a.depth);
        if (a.sample > 0) cmd += " --sample " + std::to_string(a.sample);
        write_file(a.out, cloud_csv(cloud, hash, master, cmd));
    } else if (a.format == "pgm") {
        write_file(a.out, pgm_bytes(occupancy_grid(cloud, a.pixels), hash, master));
    } else {
        throw ConfigError("--format must be csv or pgm, got '" + a.format + "'");
    }
    std::printf("wrote %s (%zu points)\n", a.out.c_str(), cloud.points.size());
    return 0;
}

struct BoxdimArgs {
    std::string points, scales, out;
};

int cmd_boxdim(const BoxdimArgs& a) {
    std::string text = read_file(a.points);
    PointCloud cloud = parse_cloud_csv(text);
    std::vector<double> scales =
        a.scales.empty() ? default_scales(cloud) : parse_scales(a.scales);
    BoxDimEstimate est = box_counting_dimension(cloud, scales);
    std::string report;
    report += "points = " + std::to_string(cloud.points.size()) + "\n";
    report += "slope = " + format_double(est.slope) + "\n";
    report += "r2 = " + format_double(est.r2) + "\n";
    report += "scales = " + join_values(est.scales) + "\n";
    report += "counts = " + join_values(est.counts) + "\n";
    std::fputs(report.c_str(), stdout);
    if (!a.out.empty()) {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : text) {
            h ^= c;
            h *= 1099511628211ull;
        }
        write_file(a.out, file_header(h, 0, "boxdim " + a.points) + report);
    }
    return 0;
}

struct ExampleArgs {
    std::string name, group = "all";
};

int cmd_example(const ExampleArgs& a) {
    NamedExample ex = example_catalog(a.name);
    std::vector<CheckRow> rows = run_example(ex, a.group);
    if (rows.empty()) {
        std::printf("example %s: no checks in group '%s'\n", a.name.c_str(),
                    a.group.c_str());
        return 0;
    }
    std::printf("%-22s %-9s %16s %16s %12s  %-17s %s\n", "quantity", "group",
                "expected", "got", "tolerance", "provenance", "status");
    std::size_t failed = 0;
    for (const auto& r : rows) {
        std::printf("%-22s %-9s %16.9g %16.9g %12.4g  %-17s %s\n",
                    r.quantity.c_str(), r.group.c_str(), r.expected, r.got,
                    r.tolerance, r.provenance.c_str(), r.passed ? "PASS" : "FAIL");
        if (!r.passed) ++failed;
    }
    if (failed > 0) {
        std::printf("%zu of %zu checks failed\n", failed, rows.size());
        return 4;
    }
    std::printf("all %zu checks passed\n", rows.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("codetree ") + kVersion +
                 " - code tree fractals: pressure, dimension, rendering"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads,
                   "worker threads (default from CODETREE_THREADS, else 1)")
        ->envname("CODETREE_THREADS");

    PressureArgs pa;
    auto* cp = app.add_subcommand("pressure",
                                  "pressure curve over an alpha grid, as CSV");
    cp->add_option("config", pa.config, "JSON config path or example:NAME")->required();
    cp->add_option("--alpha-grid", pa.grid, "LO:HI:STEP inclusive, or one value");
    cp->add_option("--depths", pa.depths, "K | K1,K2,... | LO..HI");
    auto* cp_seed = cp->add_option("--seed", pa.seed, "master seed override");
    cp->add_option("--out", pa.out, "output CSV path")->required();

    DimzeroArgs da;
    auto* cd = app.add_subcommand("dimzero", "unique pressure zero alpha_0");
    cd->add_option("config", da.config, "JSON config path or example:NAME")->required();
    cd->add_option("--mode", da.mode, "exact | montecarlo");
    cd->add_option("--depths", da.depths, "proxy depth grid (exact mode), or auto");
    cd->add_option("--trials", da.trials, "Monte Carlo trials");
    cd->add_option("--necks", da.necks, "necks per trial");
    auto* cd_seed = cd->add_option("--seed", da.seed, "master seed override");
    cd->add_option("--out", da.out, "also write the report to this path");

    RenderArgs ra;
    auto* cr = app.add_subcommand("render", "attractor point cloud (csv) or raster (pgm)");
    cr->add_option("config", ra.config, "JSON config path or example:NAME")->required();
    cr->add_option("--depth", ra.depth, "cylinder depth")->required();
    cr->add_option("--translation", ra.translation,
                   "sample:RHO[:SEED] or \"x1,y1;x2,y2;...\" per slot "
                   "(example fixtures carry a default)");
    cr->add_option("--format", ra.format, "csv | pgm");
    cr->add_option("--pixels", ra.pixels, "raster width for pgm");
    cr->add_option("--sample", ra.sample, "sample this many paths instead of full enumeration");
    auto* cr_seed = cr->add_option("--seed", ra.seed, "master seed override");
    cr->add_option("--out", ra.out, "output path")->required();

    BoxdimArgs ba;
    auto* cb = app.add_subcommand("boxdim", "box-counting slope of a point cloud CSV");
    cb->add_option("--points", ba.points, "point cloud CSV path")->required();
    cb->add_option("--scales", ba.scales, "comma list, decreasing (default: cloud ladder)");
    cb->add_option("--out", ba.out, "also write the report to this path");

    ExampleArgs ea;
    auto* ce = app.add_subcommand("example", "run a named fixture's checks");
    ce->add_option("name", ea.name, "fixture name")->required();
    ce->add_option("--run", ea.group, "all | pressure | dim | render");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    worker_threads() = std::clamp(threads, 1, 256);
    pa.seed_given = cp_seed->count() > 0;
    da.seed_given = cd_seed->count() > 0;
    ra.seed_given = cr_seed->count() > 0;

    try {
        if (cp->parsed()) return cmd_pressure(pa);
        if (cd->parsed()) return cmd_dimzero(da);
        if (cr->parsed()) return cmd_render(ra);
        if (cb->parsed()) return cmd_boxdim(ba);
        if (ce->parsed()) return cmd_example(ea);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 4;
    }
    return 2;
}
