#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <unordered_set>
#include <utility>
#include <vector>

#include "codetree/catalog.hpp"
#include "codetree/errors.hpp"
#include "codetree/matrix.hpp"
#include "codetree/pressure.hpp"
#include "codetree/rng.hpp"
#include "codetree/tree.hpp"
#include "codetree/util.hpp"

namespace codetree {

// One rendered point: the truncated series at a depth-k word, tagged with the
// tail bound valid for every point of the same cylinder.
struct CloudPoint {
    Vec x;
    std::size_t depth = 0;
    double diameter = 0.0;
};

struct PointCloud {
    int dimension = 0;
    std::vector<CloudPoint> points;

    double max_diameter() const {
        double d = 0.0;
        for (const auto& p : points) d = std::max(d, p.diameter);
        return d;
    }
};

struct WeightedCloud {
    PointCloud cloud;
    std::vector<double> weights;
};

struct BoxDimEstimate {
    double slope = 0.0;
    double r2 = 0.0;
    std::vector<double> scales;
    std::vector<std::size_t> counts;
};

// Row-major raster, row 0 at the top; 0 = occupied, 255 = background.
struct OccupancyGrid {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> data;
};

struct DimensionExperimentOptions {
    std::size_t mc_trials = 400;
    std::size_t mc_necks = 400;
};

struct DimensionReport {
    double alpha_zero = 0.0;
    bool outside_hypotheses = false;
    std::vector<double> slopes;
    double mean_slope = 0.0;
    double slope_sd = 0.0;
    std::vector<double> scales;
};

namespace detail {

// Sup bound on |Z(i)|: every term of the series is at most sigma_upper^{j-1}
// times the largest block, padded by the block count.
inline double translation_reach(const Catalog& cat, const TranslationAssignment& ta) {
    double amax = 0.0;
    for (const auto& v : ta.a) amax = std::max(amax, v.norm());
    return amax * (double)ta.a.size() / (1.0 - cat.sigma_upper);
}

inline double diameter_bound(const Catalog& cat, const TranslationAssignment& ta,
                             std::size_t k) {
    return 2.0 * std::pow(cat.sigma_upper, (double)k) * translation_reach(cat, ta);
}

inline void check_cloud_budget(const Catalog& cat, std::size_t k) {
    int min_m = cat.max_branching();
    for (const auto& f : cat.families) min_m = std::min(min_m, f.map_count());
    if (min_m >= 2 &&
        (double)k * std::log((double)min_m) > std::log((double)kEnumBudget))
        throw_enum_budget();
}

inline void bump_visited(std::atomic<std::size_t>& visited, std::size_t by) {
    if (visited.fetch_add(by, std::memory_order_relaxed) + by > kEnumBudget)
        throw_enum_budget();
}

inline void cloud_rec(FamilyCursor& cur, const TranslationAssignment& ta,
                      std::size_t left, const Mat& lin, const Vec& pos,
                      std::size_t depth, double bound,
                      std::atomic<std::size_t>& visited, std::vector<CloudPoint>& out) {
    if (left == 0) {
        out.push_back({pos, depth, bound});
        return;
    }
    const auto& maps = cur.tree.catalog().families[(std::size_t)cur.family()].maps;
    bump_visited(visited, maps.size());
    for (int d = 1; d <= (int)maps.size(); ++d) {
        const MapSpec& ms = maps[(std::size_t)(d - 1)];
        Vec npos = pos + lin * ta.a[(std::size_t)ms.slot];
        Mat nlin = lin * ms.linear;
        cur.push(d);
        cloud_rec(cur, ta, left - 1, nlin, npos, depth, bound, visited, out);
        cur.pop();
    }
}

struct MeasurePart {
    std::vector<CloudPoint> pts;
    std::vector<long double> logphi;
    LogSumExp lse;
};

inline void measure_rec(FamilyCursor& cur, const TranslationAssignment& ta, double alpha,
                        std::size_t left, const MatL& prod, const Mat& lin, const Vec& pos,
                        std::size_t depth, double bound,
                        std::atomic<std::size_t>& visited, MeasurePart& out) {
    if (left == 0) {
        auto lp = (long double)log_phi(singular_values_raw(to_double(prod)), alpha);
        out.pts.push_back({pos, depth, bound});
        out.logphi.push_back(lp);
        out.lse.add((double)lp);
        return;
    }
    const auto& maps = cur.tree.catalog().families[(std::size_t)cur.family()].maps;
    bump_visited(visited, maps.size());
    for (int d = 1; d <= (int)maps.size(); ++d) {
        const MapSpec& ms = maps[(std::size_t)(d - 1)];
        Vec npos = pos + lin * ta.a[(std::size_t)ms.slot];
        Mat nlin = lin * ms.linear;
        MatL nprod = matmul(prod, ms.linear);
        cur.push(d);
        measure_rec(cur, ta, alpha, left - 1, nprod, nlin, npos, depth, bound, visited, out);
        cur.pop();
    }
}

}  // namespace detail

// Full enumeration of the depth-k truncations, one point per valid word, in
// word order. Parallel over the top-level digit with a digit-order merge.
inline PointCloud point_cloud(const CodeTree& tree, const TranslationAssignment& ta,
                              std::size_t depth) {
    const Catalog& cat = tree.catalog();
    ta.validate(cat);
    detail::check_cloud_budget(cat, depth);
    PointCloud cloud;
    cloud.dimension = cat.dimension;
    double bound = detail::diameter_bound(cat, ta, depth);
    if (depth == 0) {
        cloud.points.push_back({Vec::zero(cat.dimension), 0, bound});
        return cloud;
    }
    detail::prefault(tree, depth);
    int root_fam = tree.family_at_unchecked({});
    const auto& root_maps = cat.families[(std::size_t)root_fam].maps;
    std::size_t m0 = root_maps.size();
    std::vector<std::vector<CloudPoint>> parts(m0);
    std::atomic<std::size_t> visited{m0};
    detail::parallel_for(m0, [&](std::size_t di) {
        detail::FamilyCursor cur(tree);
        cur.push((int)di + 1);
        const MapSpec& ms = root_maps[di];
        detail::cloud_rec(cur, ta, depth - 1, ms.linear, ta.a[(std::size_t)ms.slot],
                          depth, bound, visited, parts[di]);
    });
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    cloud.points.reserve(total);
    for (auto& p : parts) cloud.points.insert(cloud.points.end(), p.begin(), p.end());
    return cloud;
}

// Uniform random valid paths, one point per sample. This samples the code
// space, not any natural measure; weighted rendering goes through
// natural_measure instead.
inline PointCloud sampled_point_cloud(const CodeTree& tree, const TranslationAssignment& ta,
                                      std::size_t depth, std::size_t samples,
                                      std::uint64_t seed) {
    const Catalog& cat = tree.catalog();
    ta.validate(cat);
    if (samples == 0) throw ConfigError("sampled cloud needs at least one path");
    detail::prefault(tree, depth);
    PointCloud cloud;
    cloud.dimension = cat.dimension;
    double bound = detail::diameter_bound(cat, ta, depth);
    cloud.points.resize(samples);
    detail::parallel_for(samples, [&](std::size_t s) {
        Stream st = derive(seed, s, 404);
        detail::FamilyCursor cur(tree);
        Mat lin = Mat::identity(cat.dimension);
        Vec pos = Vec::zero(cat.dimension);
        for (std::size_t l = 0; l < depth; ++l) {
            const auto& maps = cat.families[(std::size_t)cur.family()].maps;
            int d = (int)st.next_index(maps.size()) + 1;
            const MapSpec& ms = maps[(std::size_t)(d - 1)];
            pos = pos + lin * ta.a[(std::size_t)ms.slot];
            lin = lin * ms.linear;
            cur.push(d);
        }
        cloud.points[s] = {pos, depth, bound};
    });
    return cloud;
}

// One translation block per slot, uniform on the closed rho-ball.
inline TranslationAssignment sample_translation(const Catalog& cat, double rho,
                                                std::uint64_t seed) {
    if (!(rho > 0.0)) throw ConfigError("translation radius must be positive");
    Stream st = derive(seed, 0, 406);
    TranslationAssignment ta;
    ta.dimension = cat.dimension;
    ta.a.reserve(cat.slots.size());
    for (std::size_t s = 0; s < cat.slots.size(); ++s) {
        Vec v = Vec::zero(cat.dimension);
        for (;;) {
            double n2 = 0.0;
            for (int i = 0; i < cat.dimension; ++i) {
                v[i] = rho * (2.0 * st.next_unit() - 1.0);
                n2 += v[i] * v[i];
            }
            if (n2 <= rho * rho) break;
        }
        ta.a.push_back(v);
    }
    return ta;
}

// Measure supported on the depth-N_m truncation points, each word weighted by
// its normalized singular value function.
inline WeightedCloud natural_measure(const CodeTree& tree, const TranslationAssignment& ta,
                                     double alpha, std::size_t m) {
    const Catalog& cat = tree.catalog();
    ta.validate(cat);
    if (alpha < 0) throw NegativeAlpha("natural measures require alpha >= 0");
    if (m == 0) throw ConfigError("neck indices are 1-based");
    if (!tree.necked()) throw NotNecked("natural measures live on necked trees");
    std::size_t nm = tree.neck(m);
    detail::check_cloud_budget(cat, nm);
    detail::prefault(tree, nm);
    double bound = detail::diameter_bound(cat, ta, nm);

    int root_fam = tree.family_at_unchecked({});
    const auto& root_maps = cat.families[(std::size_t)root_fam].maps;
    std::size_t m0 = root_maps.size();
    std::vector<detail::MeasurePart> parts(m0);
    std::atomic<std::size_t> visited{m0};
    detail::parallel_for(m0, [&](std::size_t di) {
        detail::FamilyCursor cur(tree);
        cur.push((int)di + 1);
        const MapSpec& ms = root_maps[di];
        detail::MatL prod = detail::matmul(detail::MatL::identity(cat.dimension), ms.linear);
        detail::measure_rec(cur, ta, alpha, nm - 1, prod, ms.linear,
                            ta.a[(std::size_t)ms.slot], nm, bound, visited, parts[di]);
    });

    LogSumExp z;
    for (const auto& p : parts) z.merge(p.lse);
    double logz = z.value();
    WeightedCloud wc;
    wc.cloud.dimension = cat.dimension;
    std::size_t total = 0;
    for (const auto& p : parts) total += p.pts.size();
    wc.cloud.points.reserve(total);
    wc.weights.reserve(total);
    for (auto& p : parts) {
        wc.cloud.points.insert(wc.cloud.points.end(), p.pts.begin(), p.pts.end());
        for (long double lp : p.logphi)
            wc.weights.push_back((double)std::exp(lp - (long double)logz));
    }
    return wc;
}

// Largest cylinder mass relative to the cylinder's own singular value
// function, over all proper cylinders down to the m-th neck.
inline double max_cylinder_ratio(const CodeTree& tree, double alpha, std::size_t m) {
    const Catalog& cat = tree.catalog();
    if (alpha < 0) throw NegativeAlpha("cylinder ratios require alpha >= 0");
    if (m == 0) throw ConfigError("neck indices are 1-based");
    if (!tree.necked()) throw NotNecked("cylinder ratios live on necked trees");
    std::size_t nm = tree.neck(m);
    detail::check_cloud_budget(cat, nm);
    detail::prefault(tree, nm);

    detail::FamilyCursor cur(tree);
    std::vector<std::pair<long double, long double>> cylinders;
    std::size_t visited = 1;
    std::function<long double(std::size_t, const detail::MatL&)> walk =
        [&](std::size_t left, const detail::MatL& prod) -> long double {
        auto lp = (long double)log_phi(singular_values_raw(detail::to_double(prod)), alpha);
        if (left == 0) {
            cylinders.emplace_back(lp, lp);
            return lp;
        }
        const auto& maps = cat.families[(std::size_t)cur.family()].maps;
        if ((visited += maps.size()) > detail::kEnumBudget) detail::throw_enum_budget();
        long double mass = detail::kNegInfL;
        for (int d = 1; d <= (int)maps.size(); ++d) {
            cur.push(d);
            mass = detail::lse2l(
                mass, walk(left - 1, detail::matmul(prod, maps[(std::size_t)(d - 1)].linear)));
            cur.pop();
        }
        if (!cur.prefix.empty()) cylinders.emplace_back(mass, lp);
        return mass;
    };
    long double z = walk(nm, detail::MatL::identity(cat.dimension));
    double best = 0.0;
    for (const auto& [mass, phi] : cylinders)
        best = std::max(best, (double)std::exp(mass - z - phi));
    return best;
}

inline std::pair<Vec, Vec> cloud_bbox(const PointCloud& cloud) {
    if (cloud.points.empty()) throw ConfigError("point cloud is empty");
    Vec lo = cloud.points[0].x;
    Vec hi = cloud.points[0].x;
    for (const auto& p : cloud.points)
        for (int i = 0; i < cloud.dimension; ++i) {
            lo[i] = std::min(lo[i], p.x[i]);
            hi[i] = std::max(hi[i], p.x[i]);
        }
    return {lo, hi};
}

// Grid counting with the grid anchored at the bounding-box minimum corner, so
// rigid translations of the cloud leave every count unchanged. Parallel over
// scales; each scale counts independently.
inline BoxDimEstimate box_counting_dimension(const PointCloud& cloud,
                                             const std::vector<double>& scales) {
    if (cloud.points.empty()) throw ConfigError("point cloud is empty");
    if (scales.size() < 2) throw ConfigError("box counting needs at least two scales");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0)) throw ConfigError("scales must be positive");
        if (i > 0 && !(scales[i] < scales[i - 1]))
            throw ConfigError("scales must be strictly decreasing");
    }
    double resolution = cloud.max_diameter();
    if (scales.back() < resolution)
        throw ScaleTooFine("finest scale is below the cloud's diameter bound");

    auto [lo, hi] = cloud_bbox(cloud);
    (void)hi;
    int dim = cloud.dimension;
    unsigned bits = 64u / (unsigned)dim;
    std::vector<std::size_t> counts(scales.size());
    detail::parallel_for(scales.size(), [&](std::size_t si) {
        double eps = scales[si];
        std::unordered_set<std::uint64_t> boxes;
        boxes.reserve(cloud.points.size() / 4 + 8);
        for (const auto& p : cloud.points) {
            std::uint64_t key = 0;
            for (int i = 0; i < dim; ++i) {
                auto u = (std::uint64_t)std::max(0.0, std::floor((p.x[i] - lo[i]) / eps));
                if (bits < 64 && u >= (1ull << bits))
                    throw NumericError("grid too fine for the cloud extent");
                key = bits < 64 ? (key << bits) | u : u;
            }
            boxes.insert(key);
        }
        counts[si] = boxes.size();
    });

    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0 || counts[i] > cloud.points.size())
            throw NumericError("box count out of range");
        if (i > 0 && counts[i] < counts[i - 1])
            throw NumericError("box counts decreased at a finer scale; use nested scales");
    }

    std::vector<double> xs(scales.size()), ys(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i) {
        xs[i] = std::log(1.0 / scales[i]);
        ys[i] = std::log((double)counts[i]);
    }
    LsqFit fit = lsq_fit(xs, ys);
    BoxDimEstimate est;
    est.slope = fit.slope;
    est.r2 = fit.r2;
    est.scales = scales;
    est.counts = counts;
    return est;
}

// Geometric ladder from four times the diameter bound down to the bound.
inline std::vector<double> default_scales(const PointCloud& cloud) {
    if (cloud.points.empty()) throw ConfigError("point cloud is empty");
    double d = cloud.max_diameter();
    if (!(d > 0.0)) throw ConfigError("cloud carries no diameter bound");
    return {4.0 * d, 2.0 * d, d};
}

inline OccupancyGrid occupancy_grid(const PointCloud& cloud, std::size_t pixels) {
    if (cloud.dimension != 2) throw DimensionUnsupported("occupancy rasters are 2-D only");
    if (pixels == 0) throw ConfigError("raster width must be positive");
    if (cloud.points.empty()) throw ConfigError("point cloud is empty");
    auto [lo, hi] = cloud_bbox(cloud);
    double rx = hi[0] - lo[0];
    double ry = hi[1] - lo[1];
    double base = rx > 0.0 ? rx : (ry > 0.0 ? ry : 1.0);
    double step = base / (double)pixels;
    OccupancyGrid g;
    g.width = pixels;
    g.height = std::max<std::size_t>(1, (std::size_t)std::ceil(ry / step));
    g.data.assign(g.width * g.height, 255);
    for (const auto& p : cloud.points) {
        auto cx = (std::size_t)((p.x[0] - lo[0]) / step);
        auto cy = (std::size_t)((p.x[1] - lo[1]) / step);
        cx = std::min(cx, g.width - 1);
        cy = std::min(cy, g.height - 1);
        g.data[(g.height - 1 - cy) * g.width + cx] = 0;
    }
    return g;
}

// Renders one sampled tree under many sampled translations and compares the
// box-counting slopes with the Monte Carlo pressure zero. The contraction
// hypothesis sigma_upper < 1/2 is reported, not enforced.
inline DimensionReport dimension_experiment(const TreeFactory& factory, double rho,
                                            std::size_t depth, std::size_t translations,
                                            std::uint64_t seed,
                                            const DimensionExperimentOptions& opt = {}) {
    if (translations == 0) throw ConfigError("need at least one translation");
    if (!(rho > 0.0)) throw ConfigError("translation radius must be positive");
    auto tree = factory(derive(seed, 0, 303).state);
    if (!tree) throw ConfigError("tree factory returned no tree");
    const Catalog& cat = tree->catalog();

    DimensionReport rep;
    rep.outside_hypotheses = !(cat.sigma_upper < 0.5);

    FrozenKingman frozen(factory, opt.mc_trials, opt.mc_necks, derive(seed, 1, 305).state);
    rep.alpha_zero =
        zero_of_pressure([&](double a) { return frozen.evaluate(a).mean; },
                         alpha_max_hint(cat))
            .alpha;

    MeanVar mv;
    for (std::size_t t = 0; t < translations; ++t) {
        TranslationAssignment ta = sample_translation(cat, rho, derive(seed, t, 304).state);
        PointCloud cloud = point_cloud(*tree, ta, depth);
        std::vector<double> scales = default_scales(cloud);
        BoxDimEstimate est = box_counting_dimension(cloud, scales);
        rep.slopes.push_back(est.slope);
        mv.add(est.slope);
        if (t == 0) rep.scales = scales;
    }
    rep.mean_slope = mv.mean();
    rep.slope_sd = translations > 1 ? std::sqrt(mv.variance()) : 0.0;
    return rep;
}

}  // namespace codetree
