#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "codetree/catalog.hpp"
#include "codetree/errors.hpp"
#include "codetree/generators.hpp"
#include "codetree/pressure.hpp"
#include "json.hpp"

namespace codetree {

// How a tree is grown from the catalog. `kind` selects the generator family;
// the remaining fields are read per kind:
//   homogeneous  labels (cycled through the levels)
//   explicit     labels as a finite per-level list, or `preset` (see below)
//   markov       transition, initial, seed
//   vvariable    v, seed
//   blocks       lengths, seed
// Presets under kind "explicit" rebuild the worked constructions shipped with
// the library: pressure1 (F/G alternation on a neck schedule), pressure2 and
// pressure2_variant (window-driven three-type trees), pressure3 (the unit
// fraction tree; ignores the seed). `schedule` picks the neck sequence for
// the first three: "supergeometric" (N_j = 4^{j(j+1)/2}, default) or
// "geometric" (N_j = 4^j).
struct LengthSpec {
    std::string kind = "fixed";  // fixed | geometric | uniform
    std::size_t n = 1;
    double p = 0.5;
    std::size_t max = 30;
    std::size_t lo = 1;
    std::size_t hi = 1;
};

struct GeneratorSpec {
    std::string kind;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> transition;
    std::vector<double> initial;
    int v = 0;
    LengthSpec lengths;
    std::string preset;
    std::string schedule = "supergeometric";
    std::size_t max_depth = 4096;
    std::uint64_t seed = 0;
};

struct RunConfig {
    Catalog catalog;
    GeneratorSpec generator;
};

namespace detail {

inline const nlohmann::json& cfg_get(const nlohmann::json& j, const char* key,
                                     const std::string& where) {
    auto it = j.find(key);
    if (it == j.end())
        throw SchemaError(where + " is missing required key '" + key + "'");
    return *it;
}

inline std::string cfg_string(const nlohmann::json& j, const char* key,
                              const std::string& where) {
    const auto& v = cfg_get(j, key, where);
    if (!v.is_string())
        throw SchemaError(where + "." + key + " must be a string");
    return v.get<std::string>();
}

inline double cfg_number(const nlohmann::json& v, const std::string& where) {
    if (!v.is_number()) throw SchemaError(where + " must be a number");
    return v.get<double>();
}

inline std::size_t cfg_index(const nlohmann::json& j, const char* key,
                             const std::string& where, std::size_t fallback,
                             bool required) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (required)
            throw SchemaError(where + " is missing required key '" + key + "'");
        return fallback;
    }
    if (!it->is_number_unsigned())
        throw SchemaError(where + "." + key + " must be a non-negative integer");
    return it->get<std::size_t>();
}

}  // namespace detail

inline NeckFn preset_neck(const std::string& schedule) {
    bool super = schedule.empty() || schedule == "supergeometric";
    if (!super && schedule != "geometric")
        throw SchemaError("generator.schedule must be 'supergeometric' or "
                          "'geometric', got '" + schedule + "'");
    return [super](std::size_t j) -> std::size_t {
        std::size_t e = super ? j * (j + 1) / 2 : j;
        std::size_t v = 1;
        for (std::size_t i = 0; i < e; ++i) {
            if (v > (std::numeric_limits<std::size_t>::max() >> 2))
                return std::numeric_limits<std::size_t>::max() / 2;
            v *= 4;
        }
        return v;
    };
}

// F on the even neck windows [N_{2l}, N_{2l+1}), G elsewhere. N_0 = 1, so
// level 0 always takes G.
inline LevelSchedule alternating_schedule(NeckFn neck, int f_family, int g_family) {
    return [neck = std::move(neck), f_family, g_family](std::size_t level) {
        for (std::size_t j = 0;; j += 2) {
            if (neck(j) > level) return g_family;
            if (level < neck(j + 1)) return f_family;
        }
    };
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("config is not valid JSON (byte " +
                          std::to_string(e.byte) + "): " + e.what());
    }
    if (!j.is_object()) throw SchemaError("config root must be a JSON object");

    RunConfig rc;
    const auto& dim = detail::cfg_get(j, "dimension", "config");
    if (!dim.is_number_integer())
        throw SchemaError("config.dimension must be an integer");
    rc.catalog.dimension = dim.get<int>();
    int d = rc.catalog.dimension;

    const auto& slots = detail::cfg_get(j, "slots", "config");
    if (!slots.is_array() || slots.empty())
        throw SchemaError("config.slots must be a non-empty array of names");
    for (const auto& s : slots) {
        if (!s.is_string()) throw SchemaError("config.slots entries must be strings");
        rc.catalog.slots.push_back(s.get<std::string>());
    }

    const auto& families = detail::cfg_get(j, "families", "config");
    if (!families.is_array() || families.empty())
        throw SchemaError("config.families must be a non-empty array");
    for (std::size_t f = 0; f < families.size(); ++f) {
        std::string where = "config.families[" + std::to_string(f) + "]";
        const auto& jf = families[f];
        if (!jf.is_object()) throw SchemaError(where + " must be an object");
        IFSFamily fam;
        fam.label = detail::cfg_string(jf, "label", where);
        const auto& maps = detail::cfg_get(jf, "maps", where);
        if (!maps.is_array() || maps.empty())
            throw SchemaError(where + ".maps must be a non-empty array");
        for (std::size_t m = 0; m < maps.size(); ++m) {
            std::string mw = where + ".maps[" + std::to_string(m) + "]";
            const auto& jm = maps[m];
            MapSpec ms;
            const auto& mat = detail::cfg_get(jm, "matrix", mw);
            if (!mat.is_array() || (int)mat.size() != d * d)
                throw SchemaError(mw + ".matrix must list " + std::to_string(d * d) +
                                  " entries in row-major order");
            ms.linear = Mat::zero(d);
            for (int i = 0; i < d * d; ++i)
                ms.linear.a[(std::size_t)i] =
                    detail::cfg_number(mat[(std::size_t)i], mw + ".matrix");
            std::string slot = detail::cfg_string(jm, "slot", mw);
            ms.slot = rc.catalog.slot_index(slot);
            fam.maps.push_back(ms);
        }
        rc.catalog.families.push_back(std::move(fam));
    }

    if (auto it = j.find("sigma_bounds"); it != j.end()) {
        rc.catalog.sigma_lower =
            detail::cfg_number(detail::cfg_get(*it, "lower", "config.sigma_bounds"),
                               "config.sigma_bounds.lower");
        rc.catalog.sigma_upper =
            detail::cfg_number(detail::cfg_get(*it, "upper", "config.sigma_bounds"),
                               "config.sigma_bounds.upper");
    }
    rc.catalog.validate();

    const auto& gen = detail::cfg_get(j, "generator", "config");
    if (!gen.is_object()) throw SchemaError("config.generator must be an object");
    GeneratorSpec& g = rc.generator;
    g.kind = detail::cfg_string(gen, "kind", "config.generator");
    g.seed = (std::uint64_t)detail::cfg_index(gen, "seed", "config.generator", 0, false);

    auto read_labels = [&](const char* key) {
        const auto& arr = detail::cfg_get(gen, key, "config.generator");
        if (!arr.is_array() || arr.empty())
            throw SchemaError(std::string("config.generator.") + key +
                              " must be a non-empty array of family labels");
        std::vector<std::string> out;
        for (const auto& s : arr) {
            if (!s.is_string())
                throw SchemaError(std::string("config.generator.") + key +
                                  " entries must be strings");
            out.push_back(s.get<std::string>());
            rc.catalog.family_index(out.back());
        }
        return out;
    };

    if (g.kind == "homogeneous") {
        g.labels = read_labels("labels");
    } else if (g.kind == "markov") {
        const auto& q = detail::cfg_get(gen, "transition", "config.generator");
        if (!q.is_array())
            throw SchemaError("config.generator.transition must be an array of rows");
        for (std::size_t r = 0; r < q.size(); ++r) {
            if (!q[r].is_array())
                throw SchemaError("config.generator.transition rows must be arrays");
            std::vector<double> row;
            for (const auto& x : q[r])
                row.push_back(detail::cfg_number(x, "config.generator.transition"));
            g.transition.push_back(std::move(row));
        }
        const auto& p0 = detail::cfg_get(gen, "initial", "config.generator");
        if (!p0.is_array())
            throw SchemaError("config.generator.initial must be an array");
        for (const auto& x : p0)
            g.initial.push_back(detail::cfg_number(x, "config.generator.initial"));
    } else if (g.kind == "vvariable") {
        g.v = (int)detail::cfg_index(gen, "v", "config.generator", 0, true);
        if (g.v < 1) throw SchemaError("config.generator.v must be >= 1");
    } else if (g.kind == "blocks") {
        const auto& len = detail::cfg_get(gen, "lengths", "config.generator");
        if (!len.is_object())
            throw SchemaError("config.generator.lengths must be an object");
        g.lengths.kind = detail::cfg_string(len, "kind", "config.generator.lengths");
        if (g.lengths.kind == "fixed") {
            g.lengths.n =
                detail::cfg_index(len, "n", "config.generator.lengths", 1, true);
        } else if (g.lengths.kind == "geometric") {
            g.lengths.p = detail::cfg_number(
                detail::cfg_get(len, "p", "config.generator.lengths"),
                "config.generator.lengths.p");
            g.lengths.max =
                detail::cfg_index(len, "max", "config.generator.lengths", 30, false);
        } else if (g.lengths.kind == "uniform") {
            g.lengths.lo =
                detail::cfg_index(len, "lo", "config.generator.lengths", 1, true);
            g.lengths.hi =
                detail::cfg_index(len, "hi", "config.generator.lengths", 1, true);
        } else {
            throw SchemaError("config.generator.lengths.kind must be 'fixed', "
                              "'geometric', or 'uniform'");
        }
    } else if (g.kind == "explicit") {
        bool has_preset = gen.find("preset") != gen.end();
        bool has_levels = gen.find("levels") != gen.end();
        if (has_preset == has_levels)
            throw SchemaError("config.generator of kind 'explicit' needs exactly "
                              "one of 'levels' or 'preset'");
        if (has_preset) {
            g.preset = detail::cfg_string(gen, "preset", "config.generator");
            if (g.preset != "pressure1" && g.preset != "pressure2" &&
                g.preset != "pressure2_variant" && g.preset != "pressure3")
                throw SchemaError("unknown generator preset '" + g.preset + "'");
            if (auto s = gen.find("schedule"); s != gen.end()) {
                if (!s->is_string())
                    throw SchemaError("config.generator.schedule must be a string");
                g.schedule = s->get<std::string>();
                preset_neck(g.schedule);
            }
            g.max_depth = detail::cfg_index(gen, "max_depth", "config.generator",
                                            g.max_depth, false);
        } else {
            g.labels = read_labels("levels");
        }
    } else {
        throw SchemaError("config.generator.kind must be 'homogeneous', 'markov', "
                          "'vvariable', 'blocks', or 'explicit', got '" +
                          g.kind + "'");
    }
    return rc;
}

inline std::string export_config(const RunConfig& rc) {
    nlohmann::ordered_json j;
    j["dimension"] = rc.catalog.dimension;
    j["slots"] = rc.catalog.slots;
    j["families"] = nlohmann::ordered_json::array();
    int d = rc.catalog.dimension;
    for (const auto& fam : rc.catalog.families) {
        nlohmann::ordered_json jf;
        jf["label"] = fam.label;
        jf["maps"] = nlohmann::ordered_json::array();
        for (const auto& ms : fam.maps) {
            nlohmann::ordered_json jm;
            std::vector<double> flat(ms.linear.a.begin(),
                                     ms.linear.a.begin() + d * d);
            jm["matrix"] = flat;
            jm["slot"] = rc.catalog.slots.at((std::size_t)ms.slot);
            jf["maps"].push_back(std::move(jm));
        }
        j["families"].push_back(std::move(jf));
    }
    if (rc.catalog.sigma_lower != 0.0 || rc.catalog.sigma_upper != 0.0)
        j["sigma_bounds"] = {{"lower", rc.catalog.sigma_lower},
                             {"upper", rc.catalog.sigma_upper}};

    const GeneratorSpec& g = rc.generator;
    nlohmann::ordered_json jg;
    jg["kind"] = g.kind;
    if (g.kind == "homogeneous") {
        jg["labels"] = g.labels;
    } else if (g.kind == "markov") {
        jg["transition"] = g.transition;
        jg["initial"] = g.initial;
    } else if (g.kind == "vvariable") {
        jg["v"] = g.v;
    } else if (g.kind == "blocks") {
        nlohmann::ordered_json jl;
        jl["kind"] = g.lengths.kind;
        if (g.lengths.kind == "fixed") jl["n"] = g.lengths.n;
        if (g.lengths.kind == "geometric") {
            jl["p"] = g.lengths.p;
            jl["max"] = g.lengths.max;
        }
        if (g.lengths.kind == "uniform") {
            jl["lo"] = g.lengths.lo;
            jl["hi"] = g.lengths.hi;
        }
        jg["lengths"] = std::move(jl);
    } else if (g.kind == "explicit") {
        if (!g.preset.empty()) {
            jg["preset"] = g.preset;
            if (g.preset != "pressure3") jg["schedule"] = g.schedule;
            if (g.preset == "pressure2_variant") jg["max_depth"] = g.max_depth;
        } else {
            jg["levels"] = g.labels;
        }
    }
    jg["seed"] = g.seed;
    j["generator"] = std::move(jg);
    return j.dump(2) + "\n";
}

inline TreeFactory make_factory(const RunConfig& rc) {
    Catalog cat = rc.catalog;
    cat.validate();
    const GeneratorSpec& g = rc.generator;

    if (g.kind == "homogeneous") {
        if (g.labels.empty())
            throw SchemaError("homogeneous generator needs at least one label");
        std::vector<int> fams;
        for (const auto& l : g.labels) fams.push_back(cat.family_index(l));
        return [cat, fams](std::uint64_t) {
            return homogeneous_tree(
                cat, [fams](std::size_t level) { return fams[level % fams.size()]; });
        };
    }
    if (g.kind == "markov") {
        return [cat, q = g.transition, p0 = g.initial](std::uint64_t seed) {
            return markov_tree(cat, q, p0, seed);
        };
    }
    if (g.kind == "vvariable") {
        if (g.v < 1) throw SchemaError("vvariable generator needs v >= 1");
        return [cat, v = g.v](std::uint64_t seed) {
            return vvariable_tree(cat, v, seed);
        };
    }
    if (g.kind == "blocks") {
        LengthDist nu;
        if (g.lengths.kind == "fixed") {
            nu = LengthDist::fixed(g.lengths.n);
        } else if (g.lengths.kind == "geometric") {
            nu = LengthDist::geometric(g.lengths.p, g.lengths.max);
        } else if (g.lengths.kind == "uniform") {
            nu = LengthDist::uniform_range(g.lengths.lo, g.lengths.hi);
        } else {
            throw SchemaError("block lengths kind must be 'fixed', 'geometric', "
                              "or 'uniform'");
        }
        return [cat, nu](std::uint64_t seed) { return block_tree(cat, nu, seed); };
    }
    if (g.kind == "explicit") {
        if (g.preset.empty()) {
            if (g.labels.empty())
                throw SchemaError("explicit generator needs per-level labels");
            std::vector<int> fams;
            for (const auto& l : g.labels) fams.push_back(cat.family_index(l));
            return [cat, fams](std::uint64_t) {
                return homogeneous_tree(cat, [fams](std::size_t level) {
                    if (level >= fams.size())
                        throw ConfigError(
                            "explicit level list exhausted at level " +
                            std::to_string(level) +
                            "; provide more levels or reduce the depth");
                    return fams[level];
                });
            };
        }
        NeckFn neck = preset_neck(g.schedule);
        if (g.preset == "pressure1") {
            int f = cat.family_index("F");
            int gg = cat.family_index("G");
            return [cat, neck, f, gg](std::uint64_t) {
                return homogeneous_tree(cat, alternating_schedule(neck, f, gg));
            };
        }
        if (g.preset == "pressure2") {
            return [cat, neck](std::uint64_t) { return pressure2_tree(cat, neck); };
        }
        if (g.preset == "pressure2_variant") {
            return [cat, neck, md = g.max_depth](std::uint64_t) {
                return pressure2_variant_tree(cat, neck, md);
            };
        }
        if (g.preset == "pressure3") {
            return [](std::uint64_t) { return unit_fractions_tree(); };
        }
        throw SchemaError("unknown generator preset '" + g.preset + "'");
    }
    throw SchemaError("unknown generator kind '" + g.kind + "'");
}

}  // namespace codetree
