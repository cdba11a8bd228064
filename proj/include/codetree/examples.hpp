#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "codetree/attractor.hpp"
#include "codetree/config.hpp"
#include "codetree/errors.hpp"
#include "codetree/generators.hpp"
#include "codetree/pressure.hpp"
#include "codetree/rng.hpp"

namespace codetree {

// One checkable quantity of a worked example. Statistical rows carry their
// uncertainty at run time: the recorded tolerance is ignored and replaced by
// three standard errors of the estimate.
struct ExpectedValue {
    std::string quantity;
    std::string group;  // pressure | dim | render
    double value = 0.0;
    double tolerance = 0.0;
    bool statistical = false;
    std::string provenance;
};

struct NamedExample {
    std::string name;
    std::string summary;
    RunConfig config;
    TranslationAssignment translations;
    std::size_t exact_depth = 12;
    std::vector<std::size_t> proxy_depths;
    std::size_t render_depth = 0;
    std::vector<double> render_scales;  // empty = default ladder for the cloud
    std::size_t mc_trials = 1200;
    std::size_t mc_necks = 1200;
    std::vector<ExpectedValue> expected;
};

struct CheckRow {
    std::string quantity;
    std::string group;
    double expected = 0.0;
    double got = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string provenance;
};

namespace detail {

inline Mat scalar_mat(int d, double r) {
    Mat m = Mat::zero(d);
    for (int i = 0; i < d; ++i) m.at(i, i) = r;
    return m;
}

inline IFSFamily uniform_family(const std::string& label, int d, double r,
                                int first_slot, int count) {
    IFSFamily f;
    f.label = label;
    for (int i = 0; i < count; ++i)
        f.maps.push_back({scalar_mat(d, r), first_slot + i});
    return f;
}

inline NamedExample make_sierpinski() {
    NamedExample ex;
    ex.name = "sierpinski";
    ex.summary = "three half-scale planar similitudes; the classical gasket";
    Catalog cat;
    cat.dimension = 2;
    cat.slots = {"s1", "s2", "s3"};
    cat.families = {uniform_family("S", 2, 0.5, 0, 3)};
    cat.validate();
    ex.config.catalog = cat;
    ex.config.generator.kind = "homogeneous";
    ex.config.generator.labels = {"S"};
    ex.translations.dimension = 2;
    ex.translations.a = {Vec::of(2, {0.0, 0.0}), Vec::of(2, {0.5, 0.0}),
                         Vec::of(2, {0.25, 0.4330127018922193})};
    ex.render_depth = 9;
    double z = std::log(3.0) / std::log(2.0);
    ex.expected = {
        {"alpha_zero", "dim", z, 1e-9, false, "classical value"},
        {"box_slope", "render", z, 0.08, false, "classical value"},
    };
    return ex;
}

inline NamedExample make_cantor3() {
    NamedExample ex;
    ex.name = "cantor3";
    ex.summary = "two maps of ratio 1/3 on the line; the middle-third Cantor set";
    Catalog cat;
    cat.dimension = 1;
    cat.slots = {"c1", "c2"};
    cat.families = {uniform_family("C", 1, 1.0 / 3.0, 0, 2)};
    cat.validate();
    ex.config.catalog = cat;
    ex.config.generator.kind = "homogeneous";
    ex.config.generator.labels = {"C"};
    ex.translations.dimension = 1;
    ex.translations.a = {Vec::of(1, {0.0}), Vec::of(1, {2.0 / 3.0})};
    ex.render_depth = 12;
    for (int j = 2; j <= 7; ++j) ex.render_scales.push_back(std::pow(3.0, -j));
    double z = std::log(2.0) / std::log(3.0);
    ex.expected = {
        {"alpha_zero", "dim", z, 1e-9, false, "classical value"},
        {"box_slope", "render", z, 0.05, false, "classical value"},
    };
    return ex;
}

inline NamedExample make_pressure1() {
    NamedExample ex;
    ex.name = "pressure1";
    ex.summary = "F/G alternation on a fast neck schedule; the pressure "
                 "oscillates between two linear limits";
    Catalog cat;
    cat.dimension = 1;
    cat.slots = {"f0", "f1", "g0", "g1"};
    cat.families = {uniform_family("F", 1, 0.125, 0, 2),
                    uniform_family("G", 1, 0.25, 2, 2)};
    cat.validate();
    ex.config.catalog = cat;
    ex.config.generator.kind = "explicit";
    ex.config.generator.preset = "pressure1";
    ex.translations.dimension = 1;
    ex.translations.a = {Vec::of(1, {0.0}), Vec::of(1, {0.875}),
                         Vec::of(1, {0.0}), Vec::of(1, {0.75})};
    std::size_t p = 1;
    for (int j = 0; j < 10; ++j) ex.proxy_depths.push_back(p *= 4);
    double l2 = std::log(2.0);
    ex.expected = {
        {"p_inf_zero", "pressure", 1.0 / 3.0, 0.01, false, "analytic limit"},
        {"p_sup_zero", "pressure", 0.5, 0.01, false, "analytic limit"},
        {"p_inf_alpha0.4", "pressure", -0.2 * l2, 0.02, false, "analytic limit"},
        {"p_sup_alpha0.4", "pressure", 0.2 * l2, 0.02, false, "analytic limit"},
    };
    return ex;
}

inline NamedExample make_pressure2() {
    NamedExample ex;
    ex.name = "pressure2";
    ex.summary = "three maps of ratio 1/4 against three of ratio 1/3, swapped "
                 "on neck windows; the pressure converges";
    Catalog cat;
    cat.dimension = 1;
    cat.slots = {"f1", "f2", "f3", "g1", "g2", "g3"};
    cat.families = {uniform_family("F", 1, 0.25, 0, 3),
                    uniform_family("G", 1, 1.0 / 3.0, 3, 3)};
    cat.validate();
    ex.config.catalog = cat;
    ex.config.generator.kind = "explicit";
    ex.config.generator.preset = "pressure2";
    ex.translations.dimension = 1;
    ex.translations.a = {Vec::of(1, {0.0}),       Vec::of(1, {0.375}),
                         Vec::of(1, {0.75}),      Vec::of(1, {0.0}),
                         Vec::of(1, {1.0 / 3.0}), Vec::of(1, {2.0 / 3.0})};
    ex.exact_depth = 4096;
    ex.expected = {
        {"pressure_zero", "pressure", 1.0, 1e-3, false, "analytic limit"},
        {"p_alpha0", "pressure", std::log(3.0), 0.02, false, "analytic limit"},
        {"p_alpha1", "pressure", 0.0, 0.02, false, "analytic limit"},
    };
    return ex;
}

inline NamedExample make_pressure3() {
    NamedExample ex;
    ex.name = "pressure3";
    ex.summary = "half-scale maps with identified translations; the attractor "
                 "is 0 together with the unit fractions";
    auto tree = unit_fractions_tree();
    ex.config.catalog = tree->catalog();
    ex.config.generator.kind = "explicit";
    ex.config.generator.preset = "pressure3";
    ex.translations = unit_fractions_translations();
    ex.render_depth = 20;
    for (int j = 6; j <= 15; ++j) ex.render_scales.push_back(std::pow(2.0, -j));
    ex.expected = {
        {"box_slope", "render", 0.5, 0.05, false, "classical value"},
        {"max_point_error", "render", 0.0, 1e-4, false, "closed form"},
    };
    return ex;
}

inline NamedExample make_eqrelation() {
    NamedExample ex;
    ex.name = "eqrelation";
    ex.summary = "two families sharing a translation class; three classes "
                 "cover four maps";
    Catalog cat;
    cat.dimension = 1;
    cat.slots = {"a1", "a2", "a3"};
    IFSFamily lam;
    lam.label = "lam";
    lam.maps = {{scalar_mat(1, 0.3), 0}, {scalar_mat(1, 0.25), 1}};
    IFSFamily lamp;
    lamp.label = "lamp";
    lamp.maps = {{scalar_mat(1, 0.25), 1}, {scalar_mat(1, 0.2), 2}};
    cat.families = {lam, lamp};
    cat.validate();
    ex.config.catalog = cat;
    ex.config.generator.kind = "homogeneous";
    ex.config.generator.labels = {"lam", "lamp"};
    ex.translations.dimension = 1;
    ex.translations.a = {Vec::of(1, {0.0}), Vec::of(1, {0.35}), Vec::of(1, {0.8})};
    ex.exact_depth = 2;
    ex.expected = {
        {"alpha_zero", "dim", 0.4972645414129821, 1e-9, false, "closed form"},
        {"translation_classes", "dim", 3.0, 0.0, false, "exact count"},
    };
    return ex;
}

inline NamedExample make_markov_ab() {
    NamedExample ex;
    ex.name = "markov_ab";
    ex.summary = "two-state chain over a 2-map and a 3-map family; time "
                 "averages settle the pressure";
    Catalog cat;
    cat.dimension = 2;
    cat.slots = {"a1", "a2", "b1", "b2", "b3"};
    cat.families = {uniform_family("A", 2, 1.0 / 3.0, 0, 2),
                    uniform_family("B", 2, 0.25, 2, 3)};
    cat.validate();
    ex.config.catalog = cat;
    ex.config.generator.kind = "markov";
    ex.config.generator.transition = {{0.5, 0.5}, {0.5, 0.5}};
    ex.config.generator.initial = {0.5, 0.5};
    ex.config.generator.seed = 911;
    ex.translations.dimension = 2;
    ex.translations.a = {Vec::of(2, {0.0, 0.0}), Vec::of(2, {2.0 / 3.0, 0.0}),
                         Vec::of(2, {0.0, 0.0}), Vec::of(2, {0.375, 0.0}),
                         Vec::of(2, {0.0, 0.375})};
    ex.mc_trials = 1200;
    ex.mc_necks = 1200;
    auto chain = [](double a) {
        return 0.5 * (std::log(2.0) - a * std::log(3.0)) +
               0.5 * (std::log(3.0) - a * std::log(4.0));
    };
    ex.expected = {
        {"mc_pressure_alpha0.25", "pressure", chain(0.25), 0.0, true,
         "statistical bound"},
        {"mc_pressure_alpha0.5", "pressure", chain(0.5), 0.0, true,
         "statistical bound"},
        {"mc_pressure_alpha0.75", "pressure", chain(0.75), 0.0, true,
         "statistical bound"},
        {"mc_alpha_zero", "dim", std::log(6.0) / std::log(12.0), 0.0, true,
         "statistical bound"},
    };
    return ex;
}

inline NamedExample make_vvariable_demo() {
    NamedExample ex;
    ex.name = "vvariable_demo";
    ex.summary = "V-variable growth over a 2-map and a 3-map family; V = 1 "
                 "collapses to a homogeneous tree";
    Catalog cat;
    cat.dimension = 1;
    cat.slots = {"u1", "u2", "w1", "w2", "w3"};
    cat.families = {uniform_family("U", 1, 0.3, 0, 2),
                    uniform_family("W", 1, 0.25, 2, 3)};
    cat.validate();
    ex.config.catalog = cat;
    ex.config.generator.kind = "vvariable";
    ex.config.generator.v = 2;
    ex.config.generator.seed = 77;
    ex.translations.dimension = 1;
    ex.translations.a = {Vec::of(1, {0.0}), Vec::of(1, {0.7}),
                         Vec::of(1, {0.0}), Vec::of(1, {0.375}),
                         Vec::of(1, {0.75})};
    ex.exact_depth = 16;
    ex.mc_trials = 4000;
    ex.mc_necks = 300;
    ex.expected = {
        {"v1_match", "pressure", 0.0, 0.0, false, "closed form"},
        {"vv_gap_alpha0.5", "pressure", 0.0, 0.0, true, "statistical bound"},
        {"vv_gap_alpha1.0", "pressure", 0.0, 0.0, true, "statistical bound"},
    };
    return ex;
}

}  // namespace detail

inline const std::vector<std::string>& example_names() {
    static const std::vector<std::string> names = {
        "cantor3",   "eqrelation", "markov_ab", "pressure1",
        "pressure2", "pressure3",  "sierpinski", "vvariable_demo"};
    return names;
}

inline NamedExample example_catalog(const std::string& name) {
    if (name == "sierpinski") return detail::make_sierpinski();
    if (name == "cantor3") return detail::make_cantor3();
    if (name == "pressure1") return detail::make_pressure1();
    if (name == "pressure2") return detail::make_pressure2();
    if (name == "pressure3") return detail::make_pressure3();
    if (name == "eqrelation") return detail::make_eqrelation();
    if (name == "markov_ab") return detail::make_markov_ab();
    if (name == "vvariable_demo") return detail::make_vvariable_demo();
    throw UnknownExample("no example named '" + name + "'; known names: cantor3, "
                         "eqrelation, markov_ab, pressure1, pressure2, pressure3, "
                         "sierpinski, vvariable_demo");
}

namespace detail {

// Lazily built shared state for one run_example call, so rows of one group
// do not rebuild trees, clouds, or frozen Monte Carlo tables.
struct ExampleRun {
    const NamedExample& ex;
    std::shared_ptr<CodeTree> tree_;
    std::unique_ptr<PointCloud> cloud_;
    std::unique_ptr<FrozenKingman> frozen_;

    explicit ExampleRun(const NamedExample& e) : ex(e) {}

    const CodeTree& tree() {
        if (!tree_) tree_ = make_factory(ex.config)(ex.config.generator.seed);
        return *tree_;
    }
    const PointCloud& cloud() {
        if (!cloud_) {
            if (ex.render_depth == 0)
                throw ConfigError("example '" + ex.name + "' has no render depth");
            cloud_ = std::make_unique<PointCloud>(
                point_cloud(tree(), ex.translations, ex.render_depth));
        }
        return *cloud_;
    }
    FrozenKingman& frozen() {
        if (!frozen_)
            frozen_ = std::make_unique<FrozenKingman>(
                make_factory(ex.config), ex.mc_trials, ex.mc_necks,
                derive(ex.config.generator.seed, 1, 305).state);
        return *frozen_;
    }
};

inline double quantity_alpha(const std::string& q) {
    auto pos = q.rfind("alpha");
    if (pos == std::string::npos || pos + 5 >= q.size())
        throw ConfigError("quantity '" + q + "' carries no alpha value");
    return std::stod(q.substr(pos + 5));
}

struct QuantityResult {
    double got = 0.0;
    double sigma = 0.0;
};

inline QuantityResult run_quantity(ExampleRun& run, const std::string& q) {
    const NamedExample& ex = run.ex;
    const Catalog& cat = ex.config.catalog;

    if (q == "alpha_zero") {
        const CodeTree& t = run.tree();
        std::size_t k = ex.exact_depth;
        auto z = zero_of_pressure(
            [&](double a) { return log_partition_sum(t, a, k) / (double)k; },
            alpha_max_hint(cat));
        return {z.alpha, 0.0};
    }
    if (q == "translation_classes") return {(double)cat.slots.size(), 0.0};

    if (q == "p_inf_zero" || q == "p_sup_zero") {
        const CodeTree& t = run.tree();
        bool inf = q == "p_inf_zero";
        auto z = zero_of_pressure(
            [&](double a) {
                auto est = pressure_estimates(t, a, ex.proxy_depths);
                return inf ? est.p_inf_hat : est.p_sup_hat;
            },
            alpha_max_hint(cat));
        return {z.alpha, 0.0};
    }
    if (q.rfind("p_inf_alpha", 0) == 0 || q.rfind("p_sup_alpha", 0) == 0) {
        auto est = pressure_estimates(run.tree(), quantity_alpha(q), ex.proxy_depths);
        return {q.rfind("p_inf", 0) == 0 ? est.p_inf_hat : est.p_sup_hat, 0.0};
    }
    if (q == "pressure_zero") {
        const CodeTree& t = run.tree();
        std::size_t k = ex.exact_depth;
        auto z = zero_of_pressure(
            [&](double a) { return log_partition_sum(t, a, k) / (double)k; },
            alpha_max_hint(cat));
        return {z.alpha, 0.0};
    }
    if (q.rfind("p_alpha", 0) == 0) {
        std::size_t k = ex.exact_depth;
        return {log_partition_sum(run.tree(), quantity_alpha(q), k) / (double)k, 0.0};
    }

    if (q.rfind("mc_pressure_alpha", 0) == 0) {
        auto est = run.frozen().evaluate(quantity_alpha(q));
        return {est.mean, est.std_error + est.systematic};
    }
    if (q == "mc_alpha_zero") {
        FrozenKingman& fr = run.frozen();
        auto z = zero_of_pressure(
            [&](double a) { return fr.evaluate(a).mean; }, alpha_max_hint(cat));
        double h = 0.02;
        double slope =
            (fr.evaluate(z.alpha + h).mean - fr.evaluate(std::max(0.0, z.alpha - h)).mean) /
            (z.alpha + h - std::max(0.0, z.alpha - h));
        double se = fr.evaluate(z.alpha).std_error;
        return {z.alpha, se / std::max(std::fabs(slope), 1e-9)};
    }

    if (q == "box_slope") {
        const PointCloud& cl = run.cloud();
        auto scales = ex.render_scales.empty() ? default_scales(cl) : ex.render_scales;
        return {box_counting_dimension(cl, scales).slope, 0.0};
    }
    if (q == "max_point_error") {
        double worst = 0.0;
        for (const auto& p : run.cloud().points) {
            double x = p.x[0];
            double err = std::fabs(x);
            if (x > 1e-9) {
                double n = std::max(1.0, std::round(1.0 / x));
                err = std::min(err, std::fabs(x - 1.0 / n));
            }
            worst = std::max(worst, err);
        }
        return {worst, 0.0};
    }

    if (q == "v1_match") {
        auto t1 = vvariable_tree(cat, 1, derive(ex.config.generator.seed, 0, 713).state);
        std::size_t k = ex.exact_depth;
        std::vector<int> fams;
        std::vector<int> prefix;
        for (std::size_t l = 0; l <= k + 1; ++l) {
            fams.push_back(t1->family_at(prefix));
            prefix.push_back(1);
        }
        auto homog = homogeneous_tree(cat, [fams](std::size_t level) {
            return fams[std::min(level, fams.size() - 1)];
        });
        double a = log_partition_sum(*t1, 0.7, k);
        double b = log_partition_sum(*homog, 0.7, k);
        return {std::fabs(a - b), 0.0};
    }
    if (q.rfind("vv_gap_alpha", 0) == 0) {
        double alpha = quantity_alpha(q);
        int v = ex.config.generator.v;
        auto salt = (std::uint64_t)std::llround(alpha * 100);
        auto sim = vvariable_similarity_pressure(
            cat, v, {}, alpha, ex.mc_trials,
            derive(ex.config.generator.seed, salt, 711).state);
        TreeFactory f2 = make_factory(ex.config);
        auto king = kingman_pressure(
            f2, alpha, std::max<std::size_t>(500, ex.mc_trials * 3 / 8), ex.mc_necks,
            derive(ex.config.generator.seed, salt, 712).state);
        double comb = std::sqrt(sim.std_error * sim.std_error +
                                king.std_error * king.std_error) +
                      sim.systematic + king.systematic;
        return {std::fabs(sim.mean - king.mean), comb};
    }
    throw ConfigError("example '" + ex.name + "' lists unknown quantity '" + q + "'");
}

}  // namespace detail

inline std::vector<CheckRow> run_example(const NamedExample& ex,
                                         const std::string& group = "all") {
    if (group != "all" && group != "pressure" && group != "dim" && group != "render")
        throw ConfigError("unknown check group '" + group +
                          "'; use all, pressure, dim, or render");
    detail::ExampleRun run(ex);
    std::vector<CheckRow> rows;
    for (const auto& ev : ex.expected) {
        if (group != "all" && ev.group != group) continue;
        auto res = detail::run_quantity(run, ev.quantity);
        CheckRow row;
        row.quantity = ev.quantity;
        row.group = ev.group;
        row.expected = ev.value;
        row.got = res.got;
        row.tolerance = ev.statistical ? 3.0 * res.sigma : ev.tolerance;
        row.passed = std::isfinite(res.got) &&
                     std::fabs(res.got - ev.value) <= row.tolerance;
        row.provenance = ev.provenance;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace codetree
