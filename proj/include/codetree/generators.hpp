#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "codetree/catalog.hpp"
#include "codetree/errors.hpp"
#include "codetree/rng.hpp"
#include "codetree/tree.hpp"

namespace codetree {

using LevelSchedule = std::function<int(std::size_t)>;
// j >= 0 -> N_j. Implementations saturate at SIZE_MAX instead of overflowing.
using NeckFn = std::function<std::size_t(std::size_t)>;

inline NeckFn geometric_necks(std::size_t base) {
    if (base < 2) throw ConfigError("neck base must be >= 2");
    return [base](std::size_t j) {
        std::size_t v = 1;
        for (std::size_t i = 0; i < j; ++i) {
            if (v > std::numeric_limits<std::size_t>::max() / base)
                return std::numeric_limits<std::size_t>::max();
            v *= base;
        }
        return v;
    };
}

inline NeckFn supergeometric_necks(std::size_t base) {
    if (base < 2) throw ConfigError("neck base must be >= 2");
    return [base](std::size_t j) {
        std::size_t v = 1;
        for (std::size_t i = 0; i < j * (j + 1) / 2; ++i) {
            if (v > std::numeric_limits<std::size_t>::max() / base)
                return std::numeric_limits<std::size_t>::max();
            v *= base;
        }
        return v;
    };
}

// Largest j with N_j <= level. Requires level >= N_0.
inline std::size_t interval_index(std::size_t level, const NeckFn& neck) {
    if (level < neck(0)) throw ConfigError("level precedes the first interval");
    std::size_t j = 0;
    while (neck(j + 1) <= level) ++j;
    return j;
}

// Level schedule with family `on` inside the even-indexed intervals
// [N_{2l}, N_{2l+1}) and `off` everywhere else, including levels below N_0.
inline LevelSchedule alternating_schedule(int on, int off, NeckFn neck) {
    return [on, off, neck = std::move(neck)](std::size_t level) {
        if (level < neck(0)) return off;
        return interval_index(level, neck) % 2 == 0 ? on : off;
    };
}

namespace detail {

inline int sample_discrete(const std::vector<double>& w, double total, Stream& st) {
    double u = st.next_unit() * total;
    double acc = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        if (u < acc) return (int)i;
    }
    return (int)w.size() - 1;
}

// Homogeneous trees take a schedule of levels only, so branch-dependent label
// rules are unrepresentable here by construction.
class HomogeneousTree final : public LabelSequenceTree {
public:
    HomogeneousTree(Catalog cat, LevelSchedule sched)
        : LabelSequenceTree(std::move(cat)), sched_(std::move(sched)) {}

    bool necked() const override { return true; }
    std::size_t neck(std::size_t m) const override {
        if (m == 0) throw NotNecked("neck index is 1-based");
        return m;
    }

protected:
    void grow(std::size_t l) const override {
        int fam = sched_(l);
        if (fam < 0 || (std::size_t)fam >= catalog_.family_count())
            throw ConfigError("schedule produced an out-of-range family index");
        labels_.push_back(fam);
    }

private:
    LevelSchedule sched_;
};

class MarkovTree final : public LabelSequenceTree {
public:
    MarkovTree(Catalog cat, std::vector<std::vector<double>> q,
               std::vector<double> p0, std::uint64_t seed)
        : LabelSequenceTree(std::move(cat)), q_(std::move(q)), p0_(std::move(p0)),
          stream_(derive(seed, 0)) {
        std::size_t n = catalog_.family_count();
        if (q_.size() != n) throw NotStochastic("Q must be square over the families");
        for (const auto& row : q_) {
            if (row.size() != n) throw NotStochastic("Q must be square over the families");
            double s = 0;
            for (double x : row) {
                if (x < 0) throw NotStochastic("Q has a negative entry");
                s += x;
            }
            if (std::fabs(s - 1.0) > 1e-12)
                throw NotStochastic("Q row does not sum to 1");
        }
        if (p0_.size() != n) throw BadDistribution("P0 must cover the families");
        double s0 = 0;
        for (double x : p0_) {
            if (x < 0) throw BadDistribution("P0 has a negative entry");
            s0 += x;
        }
        if (std::fabs(s0 - 1.0) > 1e-12) throw BadDistribution("P0 does not sum to 1");
        check_ergodic();
    }

    bool necked() const override { return true; }
    std::size_t neck(std::size_t m) const override {
        if (m == 0) throw NotNecked("neck index is 1-based");
        while (necks_.size() < m) {
            if (labels_.size() > 20000000)
                throw NotNecked("no return to the root label found");
            grow(labels_.size());
        }
        return necks_[m - 1];
    }

protected:
    void grow(std::size_t l) const override {
        int fam;
        if (l == 0) {
            fam = sample_discrete(p0_, 1.0, stream_);
        } else {
            fam = sample_discrete(q_[(std::size_t)labels_[l - 1]], 1.0, stream_);
            if (fam == labels_[0]) necks_.push_back(l);
        }
        labels_.push_back(fam);
    }

private:
    void check_ergodic() const {
        std::size_t n = q_.size();
        auto reach = [&](std::size_t s) {
            std::vector<char> r(n, 0);
            std::vector<std::size_t> stack = {s};
            r[s] = 1;
            while (!stack.empty()) {
                std::size_t u = stack.back();
                stack.pop_back();
                for (std::size_t v = 0; v < n; ++v)
                    if (q_[u][v] > 0 && !r[v]) {
                        r[v] = 1;
                        stack.push_back(v);
                    }
            }
            return r;
        };
        std::vector<std::vector<char>> r(n);
        for (std::size_t s = 0; s < n; ++s) r[s] = reach(s);
        std::vector<std::size_t> recurrent;
        for (std::size_t s = 0; s < n; ++s) {
            bool rec = true;
            for (std::size_t t = 0; t < n; ++t)
                if (r[s][t] && !r[t][s]) rec = false;
            if (rec) recurrent.push_back(s);
        }
        for (std::size_t i = 1; i < recurrent.size(); ++i)
            if (!r[recurrent[0]][recurrent[i]] || !r[recurrent[i]][recurrent[0]])
                throw NotErgodic("Q has more than one recurrent class");
    }

    std::vector<std::vector<double>> q_;
    std::vector<double> p0_;
    mutable Stream stream_;
    mutable std::vector<std::size_t> necks_;
};

}  // namespace detail

inline std::shared_ptr<CodeTree> homogeneous_tree(Catalog cat, LevelSchedule sched) {
    return std::make_shared<detail::HomogeneousTree>(std::move(cat), std::move(sched));
}

inline std::shared_ptr<CodeTree> markov_tree(Catalog cat,
                                             std::vector<std::vector<double>> q,
                                             std::vector<double> p0,
                                             std::uint64_t seed) {
    return std::make_shared<detail::MarkovTree>(std::move(cat), std::move(q),
                                                std::move(p0), seed);
}

struct VVariableOptions {
    // empty = uniform over families
    std::vector<double> family_weights;
    // route every child to slot 0, collapsing the tree to necks at all levels
    bool degenerate_slots = false;
};

namespace detail {

class VVariableTree final : public LevelTypedTree {
public:
    VVariableTree(Catalog cat, int v, std::uint64_t seed, VVariableOptions opt)
        : LevelTypedTree(std::move(cat)), v_(v), opt_(std::move(opt)),
          stream_(derive(seed, 0)) {
        if (v_ < 1) throw ConfigError("V must be >= 1");
        if (!opt_.family_weights.empty()) {
            if (opt_.family_weights.size() != catalog_.family_count())
                throw BadDistribution("family weights must cover the families");
            weight_total_ = 0;
            for (double w : opt_.family_weights) {
                if (w < 0) throw BadDistribution("family weight is negative");
                weight_total_ += w;
            }
            if (!(weight_total_ > 0)) throw BadDistribution("family weights sum to 0");
        }
        active_.push_back(std::vector<char>((std::size_t)v_, 0));
        active_[0][0] = 1;
    }

    bool necked() const override { return true; }
    std::size_t neck(std::size_t m) const override {
        if (m == 0) throw NotNecked("neck index is 1-based");
        while (necks_.size() < m) {
            if (levels_.size() > 200000)
                throw NotNecked("no active-set collapse found");
            grow_level(levels_.size());
        }
        return necks_[m - 1];
    }

protected:
    void grow_level(std::size_t l) const override {
        LevelData ld;
        ld.families.resize((std::size_t)v_);
        ld.children.assign((std::size_t)v_ * stride_, 0);
        for (int v = 0; v < v_; ++v) {
            int fam = opt_.family_weights.empty()
                          ? (int)stream_.next_index(catalog_.family_count())
                          : sample_discrete(opt_.family_weights, weight_total_,
                                            stream_);
            ld.families[(std::size_t)v] = fam;
            int m = catalog_.families[(std::size_t)fam].map_count();
            for (int d = 1; d <= m; ++d) {
                int slot = opt_.degenerate_slots
                               ? 0
                               : (int)stream_.next_index((std::size_t)v_);
                ld.children[(std::size_t)v * stride_ + (std::size_t)(d - 1)] = slot;
            }
        }

        std::vector<char> next((std::size_t)v_, 0);
        int count = 0;
        for (int v = 0; v < v_; ++v) {
            if (!active_[l][(std::size_t)v]) continue;
            int m = catalog_.families[(std::size_t)ld.families[(std::size_t)v]].map_count();
            for (int d = 1; d <= m; ++d) {
                int slot = ld.children[(std::size_t)v * stride_ + (std::size_t)(d - 1)];
                if (!next[(std::size_t)slot]) {
                    next[(std::size_t)slot] = 1;
                    ++count;
                }
            }
        }
        if (count == 1) necks_.push_back(l + 1);
        active_.push_back(std::move(next));
        levels_.push_back(std::move(ld));
    }

private:
    int v_;
    VVariableOptions opt_;
    double weight_total_ = 0;
    mutable Stream stream_;
    mutable std::vector<std::vector<char>> active_;
    mutable std::vector<std::size_t> necks_;
};

}  // namespace detail

inline std::shared_ptr<CodeTree> vvariable_tree(Catalog cat, int v, std::uint64_t seed,
                                                VVariableOptions opt = {}) {
    return std::make_shared<detail::VVariableTree>(std::move(cat), v, seed,
                                                   std::move(opt));
}

// Block length distribution. All supported shapes have bounded support, so the
// finite-mean requirement holds by construction; the truncated geometric is
// the bounded stand-in for its unbounded namesake, renormalized on [1, max].
struct LengthDist {
    enum class Kind { fixed, geometric, uniform };
    Kind kind = Kind::fixed;
    std::size_t value = 1;
    double p = 0.5;
    std::size_t max = 30;
    std::size_t lo = 1, hi = 1;

    static LengthDist fixed(std::size_t n) {
        if (n < 1) throw BadDistribution("block length must be >= 1");
        LengthDist d;
        d.kind = Kind::fixed;
        d.value = n;
        return d;
    }

    static LengthDist geometric(double p, std::size_t max) {
        if (!(p > 0.0) || p > 1.0) throw BadDistribution("geometric p must be in (0,1]");
        if (max < 1) throw BadDistribution("geometric truncation must be >= 1");
        LengthDist d;
        d.kind = Kind::geometric;
        d.p = p;
        d.max = max;
        return d;
    }

    static LengthDist uniform_range(std::size_t lo, std::size_t hi) {
        if (lo < 1 || lo > hi) throw BadDistribution("uniform range needs 1 <= lo <= hi");
        LengthDist d;
        d.kind = Kind::uniform;
        d.lo = lo;
        d.hi = hi;
        return d;
    }

    double mean() const {
        switch (kind) {
            case Kind::fixed: return (double)value;
            case Kind::uniform: return 0.5 * (double)(lo + hi);
            case Kind::geometric: {
                long double z = 0, m = 0, q = 1;
                for (std::size_t b = 1; b <= max; ++b) {
                    long double pb = q * (long double)p;
                    z += pb;
                    m += (long double)b * pb;
                    q *= (1 - (long double)p);
                }
                return (double)(m / z);
            }
        }
        return 0;
    }

    double variance() const {
        switch (kind) {
            case Kind::fixed: return 0.0;
            case Kind::uniform: {
                double n = (double)(hi - lo + 1);
                return (n * n - 1.0) / 12.0;
            }
            case Kind::geometric: {
                long double z = 0, m = 0, m2 = 0, q = 1;
                for (std::size_t b = 1; b <= max; ++b) {
                    long double pb = q * (long double)p;
                    z += pb;
                    m += (long double)b * pb;
                    m2 += (long double)b * b * pb;
                    q *= (1 - (long double)p);
                }
                m /= z;
                m2 /= z;
                return (double)(m2 - m * m);
            }
        }
        return 0;
    }

    std::size_t sample(Stream& st) const {
        switch (kind) {
            case Kind::fixed: return value;
            case Kind::uniform: return lo + st.next_index(hi - lo + 1);
            case Kind::geometric: {
                long double z = 0, q = 1;
                for (std::size_t b = 1; b <= max; ++b) {
                    z += q * (long double)p;
                    q *= (1 - (long double)p);
                }
                long double u = (long double)st.next_unit() * z;
                long double acc = 0;
                q = 1;
                for (std::size_t b = 1; b <= max; ++b) {
                    acc += q * (long double)p;
                    if (u < acc) return b;
                    q *= (1 - (long double)p);
                }
                return max;
            }
        }
        return 1;
    }
};

namespace detail {

// Necked tree assembled from i.i.d. finite blocks. The canonical state is the
// block sequence: cumulative lengths plus one label stream per block, keyed by
// block index and the within-block path, so nothing is materialized.
class BlockTree final : public CodeTree {
public:
    BlockTree(Catalog cat, LengthDist nu, std::uint64_t seed)
        : CodeTree(std::move(cat)), nu_(nu), seed_(seed),
          len_stream_(derive(seed, 0, 1)) {}

    bool necked() const override { return true; }
    std::size_t neck(std::size_t m) const override {
        if (m == 0) throw NotNecked("neck index is 1-based");
        ensure_blocks(m);
        return cum_[m - 1];
    }

protected:
    int family_at_impl(std::span<const int> prefix) const override {
        std::size_t level = prefix.size();
        while (cum_.empty() || cum_.back() <= level) ensure_blocks(cum_.size() + 1);
        std::size_t block = (std::size_t)(std::upper_bound(cum_.begin(), cum_.end(), level) -
                                          cum_.begin());
        std::size_t start = block == 0 ? 0 : cum_[block - 1];
        std::uint64_t h = hash_mix(seed_ ^ 0x9e3779b97f4a7c15ull, block);
        for (std::size_t i = start; i < level; ++i)
            h = hash_mix(h, (std::uint64_t)prefix[i]);
        return (int)((unsigned __int128)h * catalog_.family_count() >> 64);
    }

private:
    void ensure_blocks(std::size_t count) const {
        while (cum_.size() < count) {
            std::size_t len = nu_.sample(len_stream_);
            cum_.push_back((cum_.empty() ? 0 : cum_.back()) + len);
        }
    }

    LengthDist nu_;
    std::uint64_t seed_;
    mutable Stream len_stream_;
    mutable std::vector<std::size_t> cum_;
};

}  // namespace detail

inline std::shared_ptr<CodeTree> block_tree(Catalog cat, LengthDist nu,
                                            std::uint64_t seed) {
    return std::make_shared<detail::BlockTree>(std::move(cat), nu, seed);
}

namespace detail {

// Branch-dependent schedule: the three subtrees under the root take turns
// carrying F, switching at the interval boundaries N_j. Branch m carries F on
// the intervals with j = m - 1 (mod 3) and G otherwise; the root is G.
class Pressure2Tree final : public CodeTree {
public:
    Pressure2Tree(Catalog cat, NeckFn neck)
        : CodeTree(std::move(cat)), neck_(std::move(neck)) {
        f_ = catalog_.family_index("F");
        g_ = catalog_.family_index("G");
        for (const auto& fam : catalog_.families)
            if (fam.map_count() != 3)
                throw ConfigError("branch-alternating tree needs 3 maps per family");
        if (neck_(0) != 1) throw ConfigError("interval sequence must start at N_0 = 1");
    }

    bool structured() const override { return true; }
    std::size_t type_count(std::size_t level) const override {
        return level == 0 ? 1 : 3;
    }
    int type_family(std::size_t level, int type) const override {
        if (level == 0) return g_;
        return interval_index(level, neck_) % 3 == (std::size_t)type ? f_ : g_;
    }
    int type_child(std::size_t level, int type, int digit) const override {
        return level == 0 ? digit - 1 : type;
    }

private:
    NeckFn neck_;
    int f_, g_;
};

// Single-branch variant: F sits exactly on the nodes extending the j-th word
// w_j (words over {1,2,3} enumerated by length, then lexicographically) inside
// the j-th interval. Types are address prefixes truncated to the longest word
// length in play.
class Pressure2VariantTree final : public CodeTree {
public:
    Pressure2VariantTree(Catalog cat, NeckFn neck, std::size_t max_depth)
        : CodeTree(std::move(cat)), neck_(std::move(neck)) {
        f_ = catalog_.family_index("F");
        g_ = catalog_.family_index("G");
        for (const auto& fam : catalog_.families)
            if (fam.map_count() != 3)
                throw ConfigError("word-following tree needs 3 maps per family");
        if (neck_(0) != 1) throw ConfigError("interval sequence must start at N_0 = 1");
        refit(max_depth == 0 ? 1 : max_depth);
    }

    void ensure_depth(std::size_t levels) const override {
        if (levels > max_depth_) refit(levels);
    }

    bool structured() const override { return true; }
    std::size_t type_count(std::size_t level) const override {
        return pow3(std::min(level, (std::size_t)word_len_));
    }
    int type_family(std::size_t level, int type) const override {
        if (level == 0) return g_;
        auto [wl, wv] = word(interval_index(level, neck_));
        std::size_t len = std::min(level, (std::size_t)word_len_);
        if ((std::size_t)wl > len)
            throw NumericError("interval word outruns the tracked prefix");
        std::size_t keep = (std::size_t)type / pow3(len - (std::size_t)wl);
        return keep == (std::size_t)wv ? f_ : g_;
    }
    int type_child(std::size_t level, int type, int digit) const override {
        if (level < (std::size_t)word_len_) return type * 3 + digit - 1;
        return type;
    }

private:
    static std::size_t pow3(std::size_t e) {
        std::size_t v = 1;
        while (e--) v *= 3;
        return v;
    }

    // j-th word: length block first, lexicographic inside a block. The offset
    // within a block is the word's big-endian base-3 value.
    static std::pair<int, std::size_t> word(std::size_t j) {
        int len = 1;
        std::size_t cum = 0, cnt = 3;
        while (j >= cum + cnt) {
            cum += cnt;
            cnt *= 3;
            ++len;
        }
        return {len, j - cum};
    }

    void refit(std::size_t max_depth) const {
        auto [wl, wv] = word(interval_index(std::max<std::size_t>(max_depth, 1), neck_));
        (void)wv;
        if (wl > 10) throw EnumerationTooLarge("tracked prefix length above 10");
        word_len_ = wl;
        max_depth_ = max_depth;
    }

    NeckFn neck_;
    int f_, g_;
    mutable std::size_t max_depth_ = 1;
    mutable int word_len_ = 1;
};

// The tree coding {0} union {1/n : n >= 1} over x/2 and x/2 + 1/2, with
// terminating codes for dyadic rationals (1 itself keeps the 111... code).
// Nodes keep both maps where both half-intervals still meet the set, and drop
// to the single surviving map otherwise.
class UnitFractionsTree final : public CodeTree {
public:
    UnitFractionsTree(Catalog cat, int f1, int f2, int f3)
        : CodeTree(std::move(cat)), f1_(f1), f2_(f2), f3_(f3) {}

protected:
    int family_at_impl(std::span<const int> prefix) const override {
        if (prefix.size() > 60)
            throw EnumerationTooLarge("address depth above 60 overflows the code");
        std::uint64_t p = 0;
        int k = 0;
        int fam = classify(p, k);
        for (int d : prefix) {
            std::uint64_t bit = fam == f3_ ? 1 : (fam == f1_ ? (std::uint64_t)(d - 1) : 0);
            p = (p << 1) | bit;
            ++k;
            fam = classify(p, k);
        }
        return fam;
    }

private:
    static bool prefix_valid(unsigned __int128 p, int k) {
        if (p == 0) return true;
        unsigned __int128 one = 1;
        if (p == (one << k) - 1) return true;  // the code of 1
        unsigned __int128 twoK = one << k;
        unsigned __int128 hi = twoK / p;
        if (hi == 0) return false;
        // exists n with p/2^k <= 1/n < (p+1)/2^k  <=>  floor(2^k/p)*(p+1) > 2^k
        return hi * (p + 1) > twoK;
    }

    int classify(std::uint64_t p, int k) const {
        bool b0 = prefix_valid((unsigned __int128)p << 1, k + 1);
        bool b1 = prefix_valid(((unsigned __int128)p << 1) | 1, k + 1);
        if (b0 && b1) return f1_;
        if (b0) return f2_;
        if (b1) return f3_;
        throw NumericError("valid node lost both children");
    }

    int f1_, f2_, f3_;
};

}  // namespace detail

inline std::shared_ptr<CodeTree> pressure2_tree(Catalog cat, NeckFn neck) {
    return std::make_shared<detail::Pressure2Tree>(std::move(cat), std::move(neck));
}

inline std::shared_ptr<CodeTree> pressure2_variant_tree(Catalog cat, NeckFn neck,
                                                        std::size_t max_depth) {
    return std::make_shared<detail::Pressure2VariantTree>(std::move(cat),
                                                          std::move(neck), max_depth);
}

inline std::shared_ptr<CodeTree> unit_fractions_tree() {
    Catalog cat;
    cat.dimension = 1;
    cat.slots = {"z0", "z1"};
    Mat half = Mat::of(1, {0.5});
    cat.families = {
        {"F1", {{half, 0}, {half, 1}}},
        {"F2", {{half, 0}}},
        {"F3", {{half, 1}}},
    };
    cat.validate();
    int f1 = cat.family_index("F1");
    int f2 = cat.family_index("F2");
    int f3 = cat.family_index("F3");
    return std::make_shared<detail::UnitFractionsTree>(std::move(cat), f1, f2, f3);
}

// The canonical translations for the unit fractions tree: x/2 and x/2 + 1/2.
inline TranslationAssignment unit_fractions_translations() {
    TranslationAssignment ta;
    ta.dimension = 1;
    ta.a = {Vec::of(1, {0.0}), Vec::of(1, {0.5})};
    return ta;
}

}  // namespace codetree
