#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "codetree/catalog.hpp"
#include "codetree/errors.hpp"

namespace codetree {

// Node address: 1-based digits, root = empty. "212" parses as single digits,
// comma or space separated tokens allow branching factors above 9.
struct Address {
    std::vector<int> digits;

    static Address parse(const std::string& s) {
        Address out;
        if (s.empty()) return out;
        if (s.find(',') != std::string::npos || s.find(' ') != std::string::npos) {
            std::size_t i = 0;
            while (i < s.size()) {
                while (i < s.size() && (s[i] == ',' || s[i] == ' ')) ++i;
                if (i >= s.size()) break;
                std::size_t j = i;
                long v = 0;
                while (j < s.size() && s[j] != ',' && s[j] != ' ') {
                    if (s[j] < '0' || s[j] > '9')
                        throw InvalidAddress("address token is not a number: " + s);
                    v = v * 10 + (s[j] - '0');
                    if (v > 1000000) throw InvalidAddress("address digit too large");
                    ++j;
                }
                if (v < 1) throw InvalidAddress("address digits are 1-based");
                out.digits.push_back((int)v);
                i = j;
            }
            return out;
        }
        for (char c : s) {
            if (c < '1' || c > '9')
                throw InvalidAddress("address characters must be digits 1-9: " + s);
            out.digits.push_back(c - '0');
        }
        return out;
    }

    std::string str() const {
        bool wide = false;
        for (int d : digits) wide = wide || d > 9;
        std::string out;
        for (std::size_t i = 0; i < digits.size(); ++i) {
            if (wide && i) out += ',';
            out += std::to_string(digits[i]);
        }
        return out;
    }

    std::size_t size() const { return digits.size(); }
};

// A code tree assigns an IFS family to every valid address. Implementations
// are oracles: they answer label queries rather than materializing nodes.
// Level-structured trees additionally expose per-level "types" (dense ids,
// meaningful only within one level) so partition sums can run as a dynamic
// program over types instead of over all M^k words.
class CodeTree {
public:
    explicit CodeTree(Catalog cat) : catalog_(std::move(cat)) {}
    virtual ~CodeTree() = default;

    const Catalog& catalog() const { return catalog_; }

    // Family index at the node reached by `prefix`. Validates every digit on
    // the way down and throws InvalidAddress for out-of-range digits.
    int family_at(std::span<const int> prefix) const {
        if (structured()) {
            ensure_depth(prefix.size() + 1);
            int t = root_type();
            for (std::size_t l = 0; l < prefix.size(); ++l) {
                int fam = type_family(l, t);
                check_digit(prefix[l], fam, l);
                t = type_child(l, t, prefix[l]);
            }
            return type_family(prefix.size(), t);
        }
        for (std::size_t l = 0; l < prefix.size(); ++l) {
            int fam = family_at_impl(prefix.first(l));
            check_digit(prefix[l], fam, l);
        }
        return family_at_impl(prefix);
    }

    int label(const Address& a) const { return family_at(a.digits); }

    // Same lookup without per-digit validation, for enumeration loops that
    // only ever extend addresses by in-range digits.
    int family_at_unchecked(std::span<const int> prefix) const {
        if (structured()) {
            ensure_depth(prefix.size() + 1);
            int t = root_type();
            for (std::size_t l = 0; l < prefix.size(); ++l)
                t = type_child(l, t, prefix[l]);
            return type_family(prefix.size(), t);
        }
        return family_at_impl(prefix);
    }

    // Pre-materializes lazily generated levels [0, levels). No-op for
    // stateless trees. Call before querying from multiple threads.
    virtual void ensure_depth(std::size_t) const {}

    virtual bool structured() const { return false; }
    virtual std::size_t type_count(std::size_t) const {
        throw std::logic_error("tree is not level-structured");
    }
    virtual int root_type() const { return 0; }
    virtual int type_family(std::size_t, int) const {
        throw std::logic_error("tree is not level-structured");
    }
    virtual int type_child(std::size_t, int, int) const {
        throw std::logic_error("tree is not level-structured");
    }

    virtual bool necked() const { return false; }
    // 1-based: neck(1) is the first neck level N_1 >= 1.
    virtual std::size_t neck(std::size_t) const {
        throw NotNecked("tree has no neck sequence");
    }

protected:
    // Unchecked label query; required for trees without level structure.
    virtual int family_at_impl(std::span<const int>) const {
        throw std::logic_error("tree provides no direct label query");
    }

    void check_digit(int d, int fam, std::size_t level) const {
        int m = catalog_.families[(std::size_t)fam].map_count();
        if (d < 1 || d > m)
            throw InvalidAddress("digit " + std::to_string(d) + " at level " +
                                 std::to_string(level) + " exceeds branching " +
                                 std::to_string(m));
    }

    Catalog catalog_;

    friend class ShiftedTree;
};

// Base for trees whose levels are generated lazily in order. Subclasses fill
// one level at a time: the family of every type and, for each (type, digit),
// the child's type id at the next level.
class LevelTypedTree : public CodeTree {
public:
    explicit LevelTypedTree(Catalog cat)
        : CodeTree(std::move(cat)), stride_((std::size_t)catalog_.max_branching()) {}

    bool structured() const override { return true; }

    void ensure_depth(std::size_t levels) const override {
        while (levels_.size() < levels) grow_level(levels_.size());
    }

    std::size_t type_count(std::size_t level) const override {
        ensure_depth(level + 1);
        return levels_[level].families.size();
    }

    int type_family(std::size_t level, int type) const override {
        ensure_depth(level + 1);
        return levels_[level].families[(std::size_t)type];
    }

    int type_child(std::size_t level, int type, int digit) const override {
        ensure_depth(level + 1);
        return levels_[level].children[(std::size_t)type * stride_ +
                                       (std::size_t)(digit - 1)];
    }

protected:
    struct LevelData {
        std::vector<int> families;  // family index per type
        std::vector<int> children;  // next-level type per (type, digit), stride = max branching
    };

    // Appends data for level `l`; levels [0, l) are already built.
    virtual void grow_level(std::size_t l) const = 0;

    mutable std::vector<LevelData> levels_;
    std::size_t stride_;
};

// Level-homogeneous trees: one type per level, stored as a flat label
// sequence. Cheap enough to rebuild thousands of times in Monte Carlo runs.
class LabelSequenceTree : public CodeTree {
public:
    using CodeTree::CodeTree;

    bool structured() const override { return true; }

    void ensure_depth(std::size_t levels) const override {
        while (labels_.size() < levels) grow(labels_.size());
    }

    std::size_t type_count(std::size_t level) const override {
        ensure_depth(level + 1);
        return 1;
    }

    int type_family(std::size_t level, int) const override {
        ensure_depth(level + 1);
        return labels_[level];
    }

    int type_child(std::size_t, int, int) const override { return 0; }

protected:
    // Appends the label of level `l`; levels [0, l) are already built.
    virtual void grow(std::size_t l) const = 0;

    mutable std::vector<int> labels_;
};

// Compares the label patterns hanging below two same-length addresses, for
// all continuation words of length <= depth.
inline bool subtree_equal(const CodeTree& t, const Address& a, const Address& b,
                          std::size_t depth) {
    if (a.digits.size() != b.digits.size())
        throw InvalidAddress("subtree comparison requires equal-length addresses");
    std::vector<int> pa = a.digits, pb = b.digits;
    std::size_t budget = 20000000;
    std::function<bool(std::size_t)> rec = [&](std::size_t rem) -> bool {
        if (budget == 0) throw EnumerationTooLarge("subtree comparison too large");
        --budget;
        int fa = t.family_at(pa);
        int fb = t.family_at(pb);
        if (fa != fb) return false;
        if (rem == 0) return true;
        int m = t.catalog().families[(std::size_t)fa].map_count();
        for (int d = 1; d <= m; ++d) {
            pa.push_back(d);
            pb.push_back(d);
            bool ok = rec(rem - 1);
            pa.pop_back();
            pb.pop_back();
            if (!ok) return false;
        }
        return true;
    };
    return rec(depth);
}

// Composition f_{i1} o ... o f_{ik} along an address, accumulated as a single
// affine map (A, b): x -> Ax + b. Empty address gives the identity.
inline AffineMap composed_map(const CodeTree& t, const TranslationAssignment& ta,
                              const Address& addr) {
    ta.validate(t.catalog());
    int dim = t.catalog().dimension;
    AffineMap out{Mat::identity(dim), Vec::zero(dim)};
    std::vector<int> prefix;
    prefix.reserve(addr.digits.size());
    for (int d : addr.digits) {
        int fam = t.family_at(prefix);
        int m = t.catalog().families[(std::size_t)fam].map_count();
        if (d < 1 || d > m)
            throw InvalidAddress("address leaves the tree at level " +
                                 std::to_string(prefix.size()));
        const MapSpec& ms = t.catalog().families[(std::size_t)fam].maps[(std::size_t)(d - 1)];
        out.translation = out.translation + out.linear * ta.a[(std::size_t)ms.slot];
        out.linear = out.linear * ms.linear;
        prefix.push_back(d);
    }
    return out;
}

// View of the subtree rooted at the all-ones node of the first neck level.
// Necks renumber as N_m(shifted) = N_{m+1} - N_1.
class ShiftedTree : public CodeTree {
public:
    explicit ShiftedTree(std::shared_ptr<const CodeTree> base)
        : CodeTree(base->catalog()), base_(std::move(base)) {
        if (!base_->necked()) throw NotNecked("shift requires a necked tree");
        offset_ = base_->neck(1);
    }

    bool necked() const override { return true; }
    std::size_t neck(std::size_t m) const override {
        if (m == 0) throw NotNecked("neck index is 1-based");
        return base_->neck(m + 1) - offset_;
    }

    void ensure_depth(std::size_t levels) const override {
        base_->ensure_depth(levels + offset_);
    }
    bool structured() const override { return base_->structured(); }
    std::size_t type_count(std::size_t level) const override {
        return base_->type_count(level + offset_);
    }
    int root_type() const override {
        base_->ensure_depth(offset_ + 1);
        int t = base_->root_type();
        for (std::size_t l = 0; l < offset_; ++l) t = base_->type_child(l, t, 1);
        return t;
    }
    int type_family(std::size_t level, int type) const override {
        return base_->type_family(level + offset_, type);
    }
    int type_child(std::size_t level, int type, int digit) const override {
        return base_->type_child(level + offset_, type, digit);
    }

protected:
    int family_at_impl(std::span<const int> prefix) const override {
        std::vector<int> w(offset_, 1);
        w.insert(w.end(), prefix.begin(), prefix.end());
        return base_->family_at(w);
    }

private:
    std::shared_ptr<const CodeTree> base_;
    std::size_t offset_;
};

inline std::shared_ptr<CodeTree> shift_xi(std::shared_ptr<const CodeTree> base) {
    return std::make_shared<ShiftedTree>(std::move(base));
}

}  // namespace codetree
