#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "codetree/errors.hpp"
#include "codetree/matrix.hpp"

namespace codetree {

// One contraction of one IFS family: the linear part plus the equivalence
// class of its translation. Translations themselves live in a
// TranslationAssignment so the same catalog can be re-rendered under many
// assignments.
struct MapSpec {
    Mat linear;
    int slot = 0;
};

struct IFSFamily {
    std::string label;
    std::vector<MapSpec> maps;

    int map_count() const { return (int)maps.size(); }
};

struct Catalog {
    int dimension = 1;
    std::vector<IFSFamily> families;
    std::vector<std::string> slots;
    // contraction bounds over every map in every family; filled by validate()
    // when left at zero
    double sigma_lower = 0.0;
    double sigma_upper = 0.0;

    std::size_t family_count() const { return families.size(); }

    int max_branching() const {
        int m = 0;
        for (const auto& f : families) m = std::max(m, f.map_count());
        return m;
    }

    int family_index(const std::string& label) const {
        for (std::size_t i = 0; i < families.size(); ++i)
            if (families[i].label == label) return (int)i;
        throw UnknownLabel("no family labeled '" + label + "'");
    }

    int slot_index(const std::string& name) const {
        for (std::size_t i = 0; i < slots.size(); ++i)
            if (slots[i] == name) return (int)i;
        throw UnknownSlot("no slot named '" + name + "'");
    }

    bool all_similitudes(double tol = 1e-12) const {
        for (const auto& f : families)
            for (const auto& m : f.maps)
                if (!is_similitude(m.linear, tol)) return false;
        return true;
    }

    // Contraction ratio of a similitude catalog map (sigma_1 == sigma_D).
    double ratio_of(int family, int digit) const {
        const auto& m = families[(std::size_t)family].maps[(std::size_t)(digit - 1)];
        return singular_values(m.linear).sigma[0];
    }

    void validate() {
        if (dimension < 1 || dimension > kMaxDim)
            throw DimensionUnsupported("catalog dimension must be 1..4");
        if (families.empty()) throw ConfigError("catalog has no families");
        if (slots.empty()) throw ConfigError("catalog has no translation slots");
        for (std::size_t i = 0; i < slots.size(); ++i)
            for (std::size_t j = i + 1; j < slots.size(); ++j)
                if (slots[i] == slots[j])
                    throw ConfigError("duplicate slot name '" + slots[i] + "'");

        double lo = 1.0, hi = 0.0;
        std::vector<std::string> seen_labels;
        for (const auto& f : families) {
            if (f.label.empty()) throw ConfigError("family with empty label");
            if (std::find(seen_labels.begin(), seen_labels.end(), f.label) !=
                seen_labels.end())
                throw ConfigError("duplicate family label '" + f.label + "'");
            seen_labels.push_back(f.label);
            if (f.maps.empty())
                throw ConfigError("family '" + f.label + "' has no maps");

            std::vector<int> used;
            for (const auto& m : f.maps) {
                if (m.linear.d != dimension)
                    throw ConfigError("map dimension mismatch in family '" +
                                      f.label + "'");
                if (m.slot < 0 || (std::size_t)m.slot >= slots.size())
                    throw UnknownSlot("slot index out of range in family '" +
                                      f.label + "'");
                if (std::find(used.begin(), used.end(), m.slot) != used.end())
                    throw ConfigError("slot reused within family '" + f.label +
                                      "'; maps of one family must use distinct "
                                      "translation classes");
                used.push_back(m.slot);

                SingularData sd = singular_values(m.linear);
                lo = std::min(lo, sd.sigma[dimension - 1]);
                hi = std::max(hi, sd.sigma[0]);
            }
        }
        if (!(hi < 1.0))
            throw ConfigError("catalog contains a non-contractive map (sigma1 >= 1)");
        if (!(lo > 0.0)) throw ConfigError("catalog contains a singular map");

        if (sigma_lower == 0.0 && sigma_upper == 0.0) {
            sigma_lower = lo;
            sigma_upper = hi;
        } else {
            if (!(sigma_lower > 0.0) || !(sigma_upper < 1.0) ||
                sigma_lower > sigma_upper)
                throw ConfigError("declared sigma bounds must satisfy "
                                  "0 < lower <= upper < 1");
            if (lo < sigma_lower - 1e-12 || hi > sigma_upper + 1e-12)
                throw ConfigError("declared sigma bounds do not cover the maps");
        }
    }
};

// Concrete translations, one vector per slot.
struct TranslationAssignment {
    int dimension = 1;
    std::vector<Vec> a;

    void validate(const Catalog& cat) const {
        if (dimension != cat.dimension)
            throw ConfigError("translation assignment dimension mismatch");
        if (a.size() != cat.slots.size())
            throw ConfigError("translation assignment must cover every slot");
        for (const auto& v : a)
            if (v.d != dimension)
                throw ConfigError("translation vector dimension mismatch");
    }
};

struct AffineMap {
    Mat linear;
    Vec translation;
};

}  // namespace codetree
