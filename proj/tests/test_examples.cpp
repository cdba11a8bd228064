#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "codetree/config.hpp"
#include "codetree/errors.hpp"
#include "codetree/examples.hpp"
#include "codetree/generators.hpp"
#include "codetree/pressure.hpp"
#include "codetree/tree.hpp"
#include "oracles.hpp"

using namespace codetree;
using Catch::Matchers::ContainsSubstring;

namespace {

// closed form for the two-family alternation 0.3/0.25 and 0.25/0.2
double eqrelation_pressure(double alpha) {
    return 0.5 * (std::log(std::pow(0.3, alpha) + std::pow(0.25, alpha)) +
                  std::log(std::pow(0.25, alpha) + std::pow(0.2, alpha)));
}

double eqrelation_zero_oracle() {
    double lo = 0.0, hi = 2.0;
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        (eqrelation_pressure(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double expected_value(const NamedExample& ex, const std::string& q) {
    for (const auto& ev : ex.expected)
        if (ev.quantity == q) return ev.value;
    FAIL("fixture lacks quantity " << q);
    return 0.0;
}

const CheckRow& find_row(const std::vector<CheckRow>& rows, const std::string& q) {
    for (const auto& r : rows)
        if (r.quantity == q) return r;
    FAIL("missing quantity " << q);
    return rows.front();
}

void require_all_passed(const std::vector<CheckRow>& rows) {
    REQUIRE_FALSE(rows.empty());
    for (const auto& r : rows) {
        INFO(r.quantity << ": expected " << r.expected << " got " << r.got
                        << " tol " << r.tolerance);
        REQUIRE(r.passed);
    }
}

}  // namespace

TEST_CASE("example registry: names and unknown lookup") {
    auto names = example_names();
    std::set<std::string> want = {"pressure1", "pressure2",  "pressure3",
                                  "eqrelation", "sierpinski", "cantor3",
                                  "markov_ab", "vvariable_demo"};
    REQUIRE(std::set<std::string>(names.begin(), names.end()) == want);
    REQUIRE_THROWS_AS(example_catalog("nope"), UnknownExample);
    REQUIRE_THROWS_AS(example_catalog(""), UnknownExample);
}

TEST_CASE("fixture integrity: catalogs validate and rows carry provenance") {
    for (const auto& name : example_names()) {
        NamedExample ex = example_catalog(name);
        REQUIRE(ex.name == name);
        REQUIRE_FALSE(ex.summary.empty());
        REQUIRE_NOTHROW(ex.config.catalog.validate());
        REQUIRE_NOTHROW(ex.translations.validate(ex.config.catalog));
        REQUIRE_FALSE(ex.expected.empty());
        bool has_render = false;
        for (const auto& ev : ex.expected) {
            REQUIRE((ev.group == "pressure" || ev.group == "dim" || ev.group == "render"));
            REQUIRE_FALSE(ev.quantity.empty());
            REQUIRE_FALSE(ev.provenance.empty());
            REQUIRE(ev.tolerance >= 0.0);
            has_render = has_render || ev.group == "render";
        }
        if (has_render) REQUIRE(ex.render_depth > 0);
    }
}

TEST_CASE("sierpinski: zero and render rows reproduce") {
    NamedExample ex = example_catalog("sierpinski");
    auto rows = run_example(ex);
    require_all_passed(rows);
    const auto& zero = find_row(rows, "alpha_zero");
    REQUIRE(std::fabs(zero.got - std::log(3.0) / std::log(2.0)) <= 1e-9);
    REQUIRE(zero.group == "dim");
    REQUIRE(find_row(rows, "box_slope").group == "render");
}

TEST_CASE("cantor3: zero and render rows reproduce") {
    NamedExample ex = example_catalog("cantor3");
    auto rows = run_example(ex);
    require_all_passed(rows);
    REQUIRE(std::fabs(find_row(rows, "alpha_zero").got -
                      std::log(2.0) / std::log(3.0)) <= 1e-9);
}

TEST_CASE("eqrelation: zero matches the closed form, classes counted") {
    double oracle = eqrelation_zero_oracle();
    NamedExample ex = example_catalog("eqrelation");
    REQUIRE(std::fabs(expected_value(ex, "alpha_zero") - oracle) <= 1e-12);
    auto rows = run_example(ex);
    require_all_passed(rows);
    REQUIRE(std::fabs(find_row(rows, "alpha_zero").got - oracle) <= 1e-9);
    REQUIRE(find_row(rows, "translation_classes").got == 3.0);
}

TEST_CASE("pressure1: partition sums follow the block closed form") {
    NamedExample ex = example_catalog("pressure1");
    auto tree = make_factory(ex.config)(ex.config.generator.seed);
    auto neck = [](std::size_t j) { return oracle::supergeometric_neck(j, 4); };
    for (std::size_t k : {5, 64, 333, 4096}) {
        std::size_t nf = oracle::count_f_levels(k, neck);
        for (double alpha : {0.0, 0.4, 0.75}) {
            double want =
                (double)(oracle::alternating_log_sum(k, alpha, nf, k - nf) / (long double)k);
            double got = log_partition_sum(*tree, alpha, k) / (double)k;
            REQUIRE(got == Catch::Approx(want).margin(1e-12));
        }
    }

    RunConfig geo = ex.config;
    geo.generator.schedule = "geometric";
    auto gtree = make_factory(geo)(0);
    auto gneck = [](std::size_t j) {
        std::size_t v = 1;
        for (std::size_t i = 0; i < j; ++i) v *= 4;
        return v;
    };
    for (std::size_t k : {7, 256, 4096}) {
        std::size_t nf = oracle::count_f_levels(k, gneck);
        double want =
            (double)(oracle::alternating_log_sum(k, 0.4, nf, k - nf) / (long double)k);
        REQUIRE(log_partition_sum(*gtree, 0.4, k) / (double)k ==
                Catch::Approx(want).margin(1e-12));
    }
}

TEST_CASE("pressure1: proxy rows land where the schedule sends them") {
    NamedExample ex = example_catalog("pressure1");
    auto rows = run_example(ex, "pressure");
    require_all_passed(rows);
    REQUIRE(rows.size() == 4);
    REQUIRE(find_row(rows, "p_inf_zero").got == Catch::Approx(0.334996).margin(5e-4));
    REQUIRE(find_row(rows, "p_sup_zero").got == Catch::Approx(0.499040).margin(5e-4));
    double l2 = std::log(2.0);
    REQUIRE(std::fabs(find_row(rows, "p_inf_alpha0.4").got - (-0.2 * l2)) <= 0.02);
    REQUIRE(std::fabs(find_row(rows, "p_sup_alpha0.4").got - 0.2 * l2) <= 0.02);
}

TEST_CASE("pressure2: zero and sample rows reproduce") {
    NamedExample ex = example_catalog("pressure2");
    auto rows = run_example(ex);
    require_all_passed(rows);
    REQUIRE(std::fabs(find_row(rows, "pressure_zero").got - 1.0) <= 1e-3);
    REQUIRE(std::fabs(find_row(rows, "p_alpha0").got - std::log(3.0)) <= 0.02);
    REQUIRE(std::fabs(find_row(rows, "p_alpha1").got) <= 0.02);

    // branch-visiting modification keeps the same limit
    auto neck = [](std::size_t j) { return oracle::supergeometric_neck(j, 4); };
    auto variant = pressure2_variant_tree(ex.config.catalog, neck, 2048);
    REQUIRE(std::fabs(log_partition_sum(*variant, 1.0, 1024) / 1024.0) <= 0.05);
}

TEST_CASE("pressure3: render rows reproduce") {
    NamedExample ex = example_catalog("pressure3");
    auto rows = run_example(ex, "render");
    require_all_passed(rows);
    REQUIRE(std::fabs(find_row(rows, "box_slope").got - 0.5) <= 0.05);
    REQUIRE(find_row(rows, "max_point_error").got <= 1e-5);
}

TEST_CASE("markov_ab: statistical rows agree with the chain formula") {
    NamedExample ex = example_catalog("markov_ab");
    auto rows = run_example(ex);
    require_all_passed(rows);
    for (const char* q : {"mc_pressure_alpha0.25", "mc_pressure_alpha0.5",
                          "mc_pressure_alpha0.75"}) {
        const auto& r = find_row(rows, q);
        REQUIRE(r.tolerance > 0.0);
        REQUIRE(r.tolerance < 0.05);
    }
    const auto& zero = find_row(rows, "mc_alpha_zero");
    REQUIRE(std::fabs(zero.got - std::log(6.0) / std::log(12.0)) <= 0.02);

    TreeFactory factory = make_factory(ex.config);
    auto est = kingman_pressure(factory, 0.5, 1500, 1500, 99);
    REQUIRE(est.std_error > 0.0);
    REQUIRE(std::fabs(est.mean - oracle::markov_ab_pressure(0.5)) <=
            3.0 * est.std_error + est.systematic);
}

TEST_CASE("vvariable_demo: V=1 identity is exact, V=2 estimators agree") {
    NamedExample ex = example_catalog("vvariable_demo");
    auto rows = run_example(ex);
    require_all_passed(rows);
    REQUIRE(find_row(rows, "v1_match").got == 0.0);
    REQUIRE(find_row(rows, "vv_gap_alpha0.5").tolerance > 0.0);
}

TEST_CASE("config: export and reload round trip") {
    for (const auto& name : example_names()) {
        NamedExample ex = example_catalog(name);
        std::string text = export_config(ex.config);
        RunConfig rc = parse_config(text);
        REQUIRE(rc.catalog.dimension == ex.config.catalog.dimension);
        REQUIRE(rc.catalog.slots == ex.config.catalog.slots);
        REQUIRE(rc.catalog.families.size() == ex.config.catalog.families.size());
        for (std::size_t f = 0; f < rc.catalog.families.size(); ++f) {
            const auto& a = rc.catalog.families[f];
            const auto& b = ex.config.catalog.families[f];
            REQUIRE(a.label == b.label);
            REQUIRE(a.maps.size() == b.maps.size());
            for (std::size_t m = 0; m < a.maps.size(); ++m) {
                REQUIRE(a.maps[m].slot == b.maps[m].slot);
                for (int i = 0; i < rc.catalog.dimension; ++i)
                    for (int j = 0; j < rc.catalog.dimension; ++j)
                        REQUIRE(a.maps[m].linear.at(i, j) == b.maps[m].linear.at(i, j));
            }
        }
        REQUIRE(rc.generator.kind == ex.config.generator.kind);
        REQUIRE(rc.generator.preset == ex.config.generator.preset);
        REQUIRE(rc.generator.seed == ex.config.generator.seed);
        REQUIRE(export_config(rc) == text);

        auto ta = make_factory(ex.config)(7);
        auto tb = make_factory(rc)(7);
        double pa = log_partition_sum(*ta, 0.6, 8);
        double pb = log_partition_sum(*tb, 0.6, 8);
        REQUIRE(pa == pb);
    }
}

TEST_CASE("config: blocks and explicit level generators build") {
    std::string blocks_text = R"({
        "dimension": 1,
        "slots": ["u1", "u2"],
        "families": [
            {"label": "U", "maps": [{"matrix": [0.4], "slot": "u1"},
                                     {"matrix": [0.3], "slot": "u2"}]}
        ],
        "generator": {"kind": "blocks",
                      "lengths": {"kind": "uniform", "lo": 2, "hi": 3},
                      "seed": 5}
    })";
    RunConfig bc = parse_config(blocks_text);
    auto bt = make_factory(bc)(bc.generator.seed);
    REQUIRE(bt->necked());
    REQUIRE(bt->neck(1) >= 2);
    REQUIRE(bt->neck(1) <= 3);

    std::string explicit_text = R"({
        "dimension": 1,
        "slots": ["u1", "u2"],
        "families": [
            {"label": "U", "maps": [{"matrix": [0.4], "slot": "u1"},
                                     {"matrix": [0.3], "slot": "u2"}]},
            {"label": "W", "maps": [{"matrix": [0.25], "slot": "u1"}]}
        ],
        "generator": {"kind": "explicit", "levels": ["U", "W", "U", "W"]}
    })";
    RunConfig ec = parse_config(explicit_text);
    auto et = make_factory(ec)(0);
    REQUIRE(et->label(Address::parse("")) == 0);
    REQUIRE(et->label(Address::parse("1")) == 1);
    REQUIRE(et->label(Address::parse("11")) == 0);
    double s3 = log_partition_sum(*et, 1.0, 3);
    double want = std::log(0.4 + 0.3) + std::log(0.25) + std::log(0.4 + 0.3);
    REQUIRE(s3 == Catch::Approx(want).margin(1e-12));
    REQUIRE_THROWS_AS(log_partition_sum(*et, 1.0, 12), ConfigError);
}

TEST_CASE("config: schema violations anchor their messages") {
    REQUIRE_THROWS_MATCHES(parse_config("{ not json"), SchemaError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("byte")));
    REQUIRE_THROWS_MATCHES(
        parse_config(R"({"slots": [], "families": [], "generator": {}})"), SchemaError,
        Catch::Matchers::MessageMatches(ContainsSubstring("dimension")));
    std::string bad_matrix = R"({
        "dimension": 2,
        "slots": ["s"],
        "families": [{"label": "F", "maps": [{"matrix": [0.5], "slot": "s"}]}],
        "generator": {"kind": "homogeneous", "labels": ["F"]}
    })";
    REQUIRE_THROWS_MATCHES(parse_config(bad_matrix), SchemaError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("matrix")));
    std::string bad_slot = R"({
        "dimension": 1,
        "slots": ["s"],
        "families": [{"label": "F", "maps": [{"matrix": [0.5], "slot": "t"}]}],
        "generator": {"kind": "homogeneous", "labels": ["F"]}
    })";
    REQUIRE_THROWS_AS(parse_config(bad_slot), UnknownSlot);
    std::string bad_kind = R"({
        "dimension": 1,
        "slots": ["s"],
        "families": [{"label": "F", "maps": [{"matrix": [0.5], "slot": "s"}]}],
        "generator": {"kind": "mystery"}
    })";
    REQUIRE_THROWS_MATCHES(parse_config(bad_kind), SchemaError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("kind")));
    std::string bad_label = R"({
        "dimension": 1,
        "slots": ["s"],
        "families": [{"label": "F", "maps": [{"matrix": [0.5], "slot": "s"}]}],
        "generator": {"kind": "homogeneous", "labels": ["G"]}
    })";
    REQUIRE_THROWS_AS(parse_config(bad_label), UnknownLabel);
}

TEST_CASE("run_example: group filter") {
    NamedExample ex = example_catalog("sierpinski");
    REQUIRE(run_example(ex, "render").size() == 1);
    REQUIRE(run_example(ex, "dim").size() == 1);
    REQUIRE(run_example(ex, "all").size() == 2);
    REQUIRE_THROWS_AS(run_example(ex, "bogus"), ConfigError);
}
