#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "codetree/catalog.hpp"
#include "codetree/errors.hpp"
#include "codetree/generators.hpp"
#include "codetree/matrix.hpp"
#include "codetree/rng.hpp"
#include "codetree/tree.hpp"
#include "codetree/util.hpp"

namespace codetree {

struct PressureSample {
    std::size_t depth = 0;
    double value = 0.0;  // log S(depth) / depth
};

struct PressureEstimates {
    double alpha = 0.0;
    std::vector<PressureSample> samples;
    double p_inf_hat = 0.0;  // min over the deepest half of the samples
    double p_sup_hat = 0.0;  // max over the same window
};

// Row-major table of log S(k) / k over an (alpha, depth) grid.
struct PressureCurve {
    std::vector<double> alpha_grid;
    std::vector<std::size_t> depths;
    std::vector<double> values;

    double at(std::size_t alpha_index, std::size_t depth_index) const {
        return values[alpha_index * depths.size() + depth_index];
    }
};

struct PressureBracket {
    double alpha = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::size_t block_count = 0;
};

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(trials)
    double systematic = 0.0; // mean bracket half-width, zero for similitudes
    std::size_t trials = 0;
    std::vector<double> values;  // one retained value per trial
};

struct AlphaZero {
    double alpha = 0.0;
    double residual = 0.0;
};

using TreeFactory = std::function<std::shared_ptr<CodeTree>(std::uint64_t)>;

namespace detail {

inline constexpr std::size_t kEnumBudget = 10000000;
inline constexpr long double kNegInfL = -std::numeric_limits<long double>::infinity();

inline long double lse2l(long double a, long double b) {
    if (a == kNegInfL) return b;
    if (b == kNegInfL) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

// Compensated long double accumulator; the level recursion adds thousands of
// terms and still has to match closed forms to 1e-12.
struct NeumaierL {
    long double s = 0.0L;
    long double c = 0.0L;

    void add(long double x) {
        long double t = s + x;
        if (std::fabs(s) >= std::fabs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }

    long double value() const { return s + c; }
};

// alpha * log sigma_1 per (family, digit), plus the per-family log sum.
struct SimilitudeTable {
    std::vector<std::vector<long double>> alr;
    std::vector<long double> factor;
};

inline SimilitudeTable similitude_table(const Catalog& cat, double alpha) {
    SimilitudeTable tab;
    tab.alr.resize(cat.family_count());
    tab.factor.resize(cat.family_count());
    for (std::size_t f = 0; f < cat.family_count(); ++f) {
        int m = cat.families[f].map_count();
        auto& row = tab.alr[f];
        row.resize((std::size_t)m);
        long double acc = kNegInfL;
        for (int d = 1; d <= m; ++d) {
            long double lr = std::log((long double)cat.ratio_of((int)f, d));
            row[(std::size_t)(d - 1)] = (long double)alpha * lr;
            acc = lse2l(acc, row[(std::size_t)(d - 1)]);
        }
        tab.factor[f] = acc;
    }
    return tab;
}

template <typename Fn>
inline void parallel_for(std::size_t n, Fn&& fn) {
    std::size_t w = (std::size_t)std::max(1, worker_threads());
    if (w <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    w = std::min(w, n);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(w);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= n) return;
                    fn(i);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Tracks the family at the current node while a walk pushes and pops digits.
// Structured trees carry the type stack so each step costs O(1); the rest go
// through the direct label query.
struct FamilyCursor {
    const CodeTree& tree;
    bool typed;
    std::vector<int> prefix;
    std::vector<int> types;

    explicit FamilyCursor(const CodeTree& t) : tree(t), typed(t.structured()) {
        if (typed) types.push_back(t.root_type());
    }

    int family() const {
        if (typed) return tree.type_family(prefix.size(), types.back());
        return tree.family_at_unchecked(prefix);
    }

    void push(int digit) {
        if (typed)
            types.push_back(tree.type_child(prefix.size(), types.back(), digit));
        prefix.push_back(digit);
    }

    void pop() {
        prefix.pop_back();
        if (typed) types.pop_back();
    }
};

struct MatL {
    int d = 0;
    std::array<long double, (std::size_t)kMaxDim * kMaxDim> a{};

    static MatL identity(int d) {
        MatL m;
        m.d = d;
        for (int i = 0; i < d; ++i) m.a[(std::size_t)(i * d + i)] = 1.0L;
        return m;
    }
};

inline MatL matmul(const MatL& x, const Mat& m) {
    MatL r;
    r.d = x.d;
    for (int i = 0; i < x.d; ++i)
        for (int l = 0; l < x.d; ++l) {
            long double t = x.a[(std::size_t)(i * x.d + l)];
            for (int j = 0; j < x.d; ++j)
                r.a[(std::size_t)(i * x.d + j)] += t * (long double)m.at(l, j);
        }
    return r;
}

inline Mat to_double(const MatL& x) {
    Mat m = Mat::zero(x.d);
    for (int i = 0; i < x.d; ++i)
        for (int j = 0; j < x.d; ++j) m.at(i, j) = (double)x.a[(std::size_t)(i * x.d + j)];
    return m;
}

[[noreturn]] inline void throw_enum_budget() {
    throw EnumerationTooLarge("partition sum enumeration exceeds the 10^7 node budget");
}

// Words of length `len` below the cursor, similitude leaf values r_w^alpha.
inline void dfs_scalar(FamilyCursor& cur, const SimilitudeTable& tab, std::size_t len,
                       long double acc, std::size_t& visited, LogSumExp& out) {
    if (len == 0) {
        out.add((double)acc);
        return;
    }
    const auto& row = tab.alr[(std::size_t)cur.family()];
    for (int d = 1; d <= (int)row.size(); ++d) {
        if (++visited > kEnumBudget) throw_enum_budget();
        cur.push(d);
        dfs_scalar(cur, tab, len - 1, acc + row[(std::size_t)(d - 1)], visited, out);
        cur.pop();
    }
}

// Affine variant: carries the matrix product and evaluates the singular value
// function (and optionally its lower counterpart) at the leaves.
inline void dfs_affine(FamilyCursor& cur, double alpha, bool want_lower, std::size_t len,
                       const MatL& prod, std::size_t& visited, LogSumExp& upper,
                       LogSumExp& lower) {
    if (len == 0) {
        SingularData sd = singular_values_raw(to_double(prod));
        upper.add(log_phi(sd, alpha));
        if (want_lower) lower.add(log_phi_lower(sd, alpha));
        return;
    }
    const auto& maps = cur.tree.catalog().families[(std::size_t)cur.family()].maps;
    for (int d = 1; d <= (int)maps.size(); ++d) {
        if (++visited > kEnumBudget) throw_enum_budget();
        MatL next = matmul(prod, maps[(std::size_t)(d - 1)].linear);
        cur.push(d);
        dfs_affine(cur, alpha, want_lower, len - 1, next, visited, upper, lower);
        cur.pop();
    }
}

// Dynamic program over level types for similitude catalogs. Returns log S(k)
// for every requested depth (strictly increasing) in one pass.
inline std::vector<double> dp_log_sums(const CodeTree& tree, double alpha,
                                       const std::vector<std::size_t>& depths) {
    SimilitudeTable tab = similitude_table(tree.catalog(), alpha);
    std::size_t kmax = depths.back();
    tree.ensure_depth(kmax + 1);

    std::vector<double> out(depths.size());
    std::size_t next = 0;
    while (next < depths.size() && depths[next] == 0) out[next++] = 0.0;
    if (next == depths.size()) return out;

    bool scalar_mode = true;
    NeumaierL scalar;
    std::vector<long double> g;
    if (tree.type_count(0) != 1) {
        scalar_mode = false;
        g.assign(tree.type_count(0), kNegInfL);
        g[(std::size_t)tree.root_type()] = 0.0L;
    }

    for (std::size_t l = 0; l < kmax; ++l) {
        std::size_t tcn = tree.type_count(l + 1);
        if (scalar_mode && tcn == 1) {
            scalar.add(tab.factor[(std::size_t)tree.type_family(l, 0)]);
        } else {
            if (scalar_mode) {
                g.assign(1, scalar.value());
                scalar_mode = false;
            }
            std::vector<long double> g2(tcn, kNegInfL);
            for (std::size_t t = 0; t < g.size(); ++t) {
                if (g[t] == kNegInfL) continue;
                const auto& row = tab.alr[(std::size_t)tree.type_family(l, (int)t)];
                for (int d = 1; d <= (int)row.size(); ++d) {
                    auto nt = (std::size_t)tree.type_child(l, (int)t, d);
                    g2[nt] = lse2l(g2[nt], g[t] + row[(std::size_t)(d - 1)]);
                }
            }
            g.swap(g2);
        }
        if (l + 1 == depths[next]) {
            long double v;
            if (scalar_mode) {
                v = scalar.value();
            } else {
                v = kNegInfL;
                for (long double x : g) v = lse2l(v, x);
            }
            out[next++] = (double)v;
            if (next == depths.size()) break;
        }
    }
    return out;
}

// Materialize lazily generated state so enumeration can fan out over threads
// without anyone mutating the tree.
inline void prefault(const CodeTree& tree, std::size_t k) {
    tree.ensure_depth(k + 1);
    if (!tree.structured() && k > 1) {
        std::vector<int> ones(k - 1, 1);
        (void)tree.family_at_unchecked(ones);
    }
}

// Enumeration fallback: exact for any tree, exponential in k. Partitioned by
// the top-level digit; each part accumulates in a fixed order and the parts
// merge in digit order, so the result does not depend on the thread count.
inline double enum_log_sum(const CodeTree& tree, double alpha, std::size_t k) {
    const Catalog& cat = tree.catalog();
    int min_m = cat.max_branching();
    for (const auto& f : cat.families) min_m = std::min(min_m, f.map_count());
    if (min_m >= 2 &&
        (double)k * std::log((double)min_m) > std::log((double)kEnumBudget))
        throw_enum_budget();

    prefault(tree, k);
    bool simil = cat.all_similitudes();
    SimilitudeTable tab = simil ? similitude_table(cat, alpha) : SimilitudeTable{};

    int root_fam = tree.family_at_unchecked({});
    auto m0 = (std::size_t)cat.families[(std::size_t)root_fam].map_count();
    std::vector<LogSumExp> parts(m0);
    std::vector<std::size_t> visits(m0, 0);
    parallel_for(m0, [&](std::size_t di) {
        FamilyCursor cur(tree);
        std::size_t visited = 1;
        cur.push((int)di + 1);
        if (simil) {
            dfs_scalar(cur, tab, k - 1, tab.alr[(std::size_t)root_fam][di], visited,
                       parts[di]);
        } else {
            MatL prod = matmul(MatL::identity(cat.dimension),
                               cat.families[(std::size_t)root_fam].maps[di].linear);
            LogSumExp unused;
            dfs_affine(cur, alpha, false, k - 1, prod, visited, parts[di], unused);
        }
        visits[di] = visited;
    });

    std::size_t total = 0;
    for (std::size_t v : visits) total += v;
    if (total > kEnumBudget) throw_enum_budget();

    LogSumExp out;
    for (const auto& p : parts) out.merge(p);
    return out.value();
}

// Two-pass mean / standard error; identical retained values must come out
// with a standard error of exactly zero.
inline MonteCarloEstimate mc_from_values(std::vector<double> values, double systematic) {
    MonteCarloEstimate est;
    est.trials = values.size();
    NeumaierSum sum;
    for (double v : values) sum.add(v);
    est.mean = sum.value() / (double)values.size();
    NeumaierSum dev2;
    for (double v : values) {
        double d = v - est.mean;
        dev2.add(d * d);
    }
    double var = values.size() > 1 ? dev2.value() / (double)(values.size() - 1) : 0.0;
    est.std_error = var > 0.0 ? std::sqrt(var / (double)values.size()) : 0.0;
    est.systematic = systematic;
    est.values = std::move(values);
    return est;
}

}  // namespace detail

// log S(k, alpha): log of the sum of Phi^alpha over all valid depth-k words.
// Level-structured similitude trees use the type recursion (linear in k);
// everything else enumerates words under a 10^7 node budget.
inline double log_partition_sum(const CodeTree& tree, double alpha, std::size_t k) {
    if (alpha < 0) throw NegativeAlpha("partition sums require alpha >= 0");
    if (k == 0) return 0.0;
    if (tree.structured() && tree.catalog().all_similitudes())
        return detail::dp_log_sums(tree, alpha, {k})[0];
    return detail::enum_log_sum(tree, alpha, k);
}

namespace detail {

inline std::vector<double> log_sums_multi(const CodeTree& tree, double alpha,
                                          const std::vector<std::size_t>& depths) {
    if (tree.structured() && tree.catalog().all_similitudes())
        return dp_log_sums(tree, alpha, depths);
    std::vector<double> out(depths.size());
    for (std::size_t i = 0; i < depths.size(); ++i)
        out[i] = log_partition_sum(tree, alpha, depths[i]);
    return out;
}

inline void check_depth_grid(const std::vector<std::size_t>& depths) {
    if (depths.empty()) throw ConfigError("no sample depths given");
    if (depths.front() == 0) throw ConfigError("sample depths must be positive");
    for (std::size_t i = 0; i + 1 < depths.size(); ++i)
        if (depths[i] >= depths[i + 1])
            throw ConfigError("sample depths must be strictly increasing");
}

}  // namespace detail

// Finite-depth pressure proxies log S(k)/k, with min and max taken over the
// deepest half of the sample window. On trees whose interval structure grows
// fast enough the two proxies approach the lower and upper pressure.
inline PressureEstimates pressure_estimates(const CodeTree& tree, double alpha,
                                            const std::vector<std::size_t>& depths) {
    if (alpha < 0) throw NegativeAlpha("partition sums require alpha >= 0");
    detail::check_depth_grid(depths);
    std::vector<double> sums = detail::log_sums_multi(tree, alpha, depths);

    PressureEstimates est;
    est.alpha = alpha;
    est.samples.resize(depths.size());
    for (std::size_t i = 0; i < depths.size(); ++i)
        est.samples[i] = {depths[i], sums[i] / (double)depths[i]};

    std::size_t window = (depths.size() + 1) / 2;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = depths.size() - window; i < depths.size(); ++i) {
        lo = std::min(lo, est.samples[i].value);
        hi = std::max(hi, est.samples[i].value);
    }
    est.p_inf_hat = lo;
    est.p_sup_hat = hi;
    return est;
}

inline PressureCurve pressure_curve(const CodeTree& tree, const std::vector<double>& alphas,
                                    const std::vector<std::size_t>& depths) {
    if (alphas.empty()) throw ConfigError("no alpha grid given");
    detail::check_depth_grid(depths);
    PressureCurve curve;
    curve.alpha_grid = alphas;
    curve.depths = depths;
    curve.values.resize(alphas.size() * depths.size());
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        std::vector<double> sums = detail::log_sums_multi(tree, alphas[ai], depths);
        for (std::size_t ki = 0; ki < depths.size(); ++ki)
            curve.values[ai * depths.size() + ki] = sums[ki] / (double)depths[ki];
    }
    return curve;
}

// Sandwich for log S(N_n)/N_n from per-block sums between consecutive necks.
// Each block is enumerated below the all-ones neck prefix; the upper bound
// uses Phi, the lower one the D = 2 lower singular value function. For
// similitude catalogs both collapse to the exact block product.
inline PressureBracket pressure_bracket(const CodeTree& tree, double alpha,
                                        std::size_t blocks) {
    if (alpha < 0) throw NegativeAlpha("pressure brackets require alpha >= 0");
    if (blocks == 0) throw ConfigError("pressure_bracket needs at least one block");
    if (!tree.necked()) throw NotNecked("pressure brackets need a neck sequence");

    const Catalog& cat = tree.catalog();
    bool simil = cat.all_similitudes();
    if (!simil) {
        if (cat.dimension != 2)
            throw DimensionUnsupported(
                "affine pressure brackets are implemented for D = 2 only");
        if (alpha > 2.0)
            throw AlphaOutOfRange("affine lower bounds require alpha in [0, 2]");
    }

    std::size_t nn = tree.neck(blocks);
    detail::prefault(tree, nn);
    detail::SimilitudeTable tab =
        simil ? detail::similitude_table(cat, alpha) : detail::SimilitudeTable{};

    NeumaierSum upper_sum, lower_sum;
    std::size_t visited = 0;
    detail::FamilyCursor cur(tree);
    std::size_t start = 0;
    for (std::size_t b = 1; b <= blocks; ++b) {
        std::size_t end = tree.neck(b);
        std::size_t len = end - start;
        double up, lo;
        if (simil) {
            LogSumExp acc;
            detail::dfs_scalar(cur, tab, len, 0.0L, visited, acc);
            up = acc.value();
            lo = up;
        } else {
            LogSumExp u, l;
            detail::dfs_affine(cur, alpha, true, len, detail::MatL::identity(cat.dimension),
                               visited, u, l);
            up = u.value();
            lo = l.value();
        }
        if (visited > detail::kEnumBudget) detail::throw_enum_budget();
        upper_sum.add(up);
        lower_sum.add(lo);
        for (std::size_t i = 0; i < len; ++i) cur.push(1);
        start = end;
    }

    PressureBracket br;
    br.alpha = alpha;
    br.block_count = blocks;
    br.upper = upper_sum.value() / (double)nn;
    br.lower = lower_sum.value() / (double)nn;
    return br;
}

// Bisection zero of a decreasing pressure estimate. The hint bounds the
// initial bracket; it is doubled while p stays nonnegative, up to a hard cap
// of four times the hint. Monotonicity is spot-checked by sampling, which is
// robust on frozen Monte Carlo curves where derivatives are unavailable.
inline AlphaZero zero_of_pressure(const std::function<double(double)>& p, double hint) {
    if (!(hint > 0.0) || !std::isfinite(hint))
        throw ConfigError("zero_of_pressure needs a positive alpha hint");
    constexpr double kSlack = 1e-12;

    double prev = p(0.0);
    if (prev < -kSlack)
        throw NotDecreasing("pressure estimate is negative at alpha = 0");
    for (int i = 1; i <= 8; ++i) {
        double v = p(hint * (double)i / 8.0);
        if (v > prev + kSlack)
            throw NotDecreasing("pressure estimate is not decreasing in alpha");
        prev = v;
    }

    double hi = hint;
    double cap = 4.0 * hint;
    while (prev >= 0.0) {
        hi *= 2.0;
        if (hi > cap)
            throw NoSignChange("pressure estimate stays nonnegative up to four times the hint");
        double v = p(hi);
        if (v > prev + kSlack)
            throw NotDecreasing("pressure estimate is not decreasing in alpha");
        prev = v;
    }

    double lo = 0.0;
    while (hi - lo >= 1e-9) {
        double mid = 0.5 * (lo + hi);
        if (p(mid) < 0.0)
            hi = mid;
        else
            lo = mid;
    }
    double alpha = 0.5 * (lo + hi);
    return {alpha, p(alpha)};
}

// Upper starting point for zero searches: above D + log M / log(1/sigma_max)
// even the largest admissible sum M * sigma_max^alpha has negative log.
inline double alpha_max_hint(const Catalog& cat) {
    double m = (double)cat.max_branching();
    return (double)cat.dimension + std::log(m) / std::log(1.0 / cat.sigma_upper);
}

// Zero of log sum r_i^alpha for similitude ratios: the Moran equation.
inline double moran_dimension(const std::vector<double>& ratios) {
    if (ratios.empty()) throw BadRatio("no contraction ratios given");
    for (double r : ratios)
        if (!std::isfinite(r) || !(r > 0.0) || !(r < 1.0))
            throw BadRatio("contraction ratios must lie in (0, 1)");
    auto f = [&](double a) {
        double s = 0.0;
        for (double r : ratios) s += std::pow(r, a);
        return std::log(s);
    };
    double hi = 1.0;
    while (f(hi) >= 0.0) {
        hi *= 2.0;
        if (hi > 1e12) throw NumericError("Moran equation has no accessible zero");
    }
    double lo = 0.0;
    while (hi - lo >= 1e-12) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Monte Carlo estimate of the pressure from the subadditive sequence: each
// trial draws an independent tree and evaluates log S(N_n)/N_n at the n-th
// neck. Affine trees fall back to bracket midpoints and report the mean
// half-width as the systematic term.
inline MonteCarloEstimate kingman_pressure(const TreeFactory& factory, double alpha,
                                           std::size_t trials, std::size_t necks_per_trial,
                                           std::uint64_t seed) {
    if (trials < 2) throw ConfigError("kingman_pressure needs at least 2 trials");
    if (necks_per_trial == 0)
        throw ConfigError("kingman_pressure needs at least one neck per trial");
    if (alpha < 0) throw NegativeAlpha("partition sums require alpha >= 0");

    std::vector<double> values(trials);
    std::vector<double> widths(trials);
    detail::parallel_for(trials, [&](std::size_t t) {
        auto tree = factory(derive(seed, t, 101).state);
        if (!tree || !tree->necked())
            throw NotNecked("kingman_pressure requires necked trees");
        std::size_t nn = tree->neck(necks_per_trial);
        if (tree->catalog().all_similitudes()) {
            values[t] = log_partition_sum(*tree, alpha, nn) / (double)nn;
            widths[t] = 0.0;
        } else {
            auto br = pressure_bracket(*tree, alpha, necks_per_trial);
            values[t] = 0.5 * (br.lower + br.upper);
            widths[t] = 0.5 * (br.upper - br.lower);
        }
    });

    NeumaierSum wsum;
    for (double w : widths) wsum.add(w);
    return detail::mc_from_values(std::move(values), wsum.value() / (double)trials);
}

// Per-trial family counts are a sufficient statistic for log S(N_n)/N_n on
// level-homogeneous similitude trees, so one set of sampled trees supports
// evaluation on a whole alpha grid. This is what makes zero searches on
// Monte Carlo pressure curves cheap and strictly decreasing in alpha.
class FrozenKingman {
public:
    FrozenKingman(const TreeFactory& factory, std::size_t trials,
                  std::size_t necks_per_trial, std::uint64_t seed) {
        if (trials < 2) throw ConfigError("frozen curves need at least 2 trials");
        if (necks_per_trial == 0)
            throw ConfigError("frozen curves need at least one neck per trial");
        counts_.resize(trials);
        lengths_.resize(trials);
        record(factory, 0, seed, necks_per_trial, true);
        detail::parallel_for(trials - 1, [&](std::size_t i) {
            record(factory, i + 1, seed, necks_per_trial, false);
        });
    }

    MonteCarloEstimate evaluate(double alpha) const {
        if (alpha < 0) throw NegativeAlpha("partition sums require alpha >= 0");
        detail::SimilitudeTable tab = detail::similitude_table(catalog_, alpha);
        std::vector<double> values(counts_.size());
        for (std::size_t t = 0; t < counts_.size(); ++t) {
            long double s = 0.0L;
            for (std::size_t f = 0; f < counts_[t].size(); ++f)
                s += (long double)counts_[t][f] * tab.factor[f];
            values[t] = (double)(s / (long double)lengths_[t]);
        }
        return detail::mc_from_values(std::move(values), 0.0);
    }

    std::size_t trials() const { return counts_.size(); }
    const Catalog& catalog() const { return catalog_; }

private:
    void record(const TreeFactory& factory, std::size_t t, std::uint64_t seed,
                std::size_t necks, bool capture_catalog) {
        auto tree = factory(derive(seed, t, 101).state);
        if (!tree || !tree->necked())
            throw NotNecked("frozen curves require necked trees");
        if (!tree->structured())
            throw ConfigError("frozen curves need level-homogeneous trees");
        if (!tree->catalog().all_similitudes())
            throw NotSimilarity("frozen curves need similitude catalogs");
        std::size_t nn = tree->neck(necks);
        std::vector<std::uint32_t> counts(tree->catalog().family_count(), 0);
        for (std::size_t l = 0; l < nn; ++l) {
            if (tree->type_count(l) != 1)
                throw ConfigError("frozen curves need level-homogeneous trees");
            ++counts[(std::size_t)tree->type_family(l, 0)];
        }
        if (capture_catalog)
            catalog_ = tree->catalog();
        else if (tree->catalog().family_count() != catalog_.family_count())
            throw ConfigError("tree factory changed its catalog between trials");
        counts_[t] = std::move(counts);
        lengths_[t] = nn;
    }

    Catalog catalog_;
    std::vector<std::vector<std::uint32_t>> counts_;
    std::vector<std::size_t> lengths_;
};

// Ratio estimator over independent first-neck blocks of V-variable trees:
// p_hat = sum X_t / sum N_t with X_t = log S(N_1) of trial t. The retained
// values are the linearized per-trial contributions, so their mean is p_hat
// and their spread gives the delta-method standard error.
inline MonteCarloEstimate vvariable_similarity_pressure(const Catalog& cat, int v,
                                                        const VVariableOptions& options,
                                                        double alpha, std::size_t trials,
                                                        std::uint64_t seed) {
    if (!cat.all_similitudes())
        throw NotSimilarity("the block ratio estimator needs a similitude catalog");
    if (trials < 2) throw ConfigError("the block ratio estimator needs at least 2 trials");
    if (alpha < 0) throw NegativeAlpha("partition sums require alpha >= 0");

    std::vector<double> xs(trials);
    std::vector<double> ns(trials);
    detail::parallel_for(trials, [&](std::size_t t) {
        auto tree = vvariable_tree(cat, v, derive(seed, t, 202).state, options);
        std::size_t n1 = tree->neck(1);
        xs[t] = log_partition_sum(*tree, alpha, n1);
        ns[t] = (double)n1;
    });

    NeumaierSum sx, sn;
    for (std::size_t t = 0; t < trials; ++t) {
        sx.add(xs[t]);
        sn.add(ns[t]);
    }
    double p_hat = sx.value() / sn.value();
    double n_bar = sn.value() / (double)trials;
    std::vector<double> values(trials);
    for (std::size_t t = 0; t < trials; ++t)
        values[t] = p_hat + (xs[t] - p_hat * ns[t]) / n_bar;
    return detail::mc_from_values(std::move(values), 0.0);
}

}  // namespace codetree
