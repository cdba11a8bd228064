// Acceptance gate: eight criteria, one [PASS]/[FAIL] line each, tolerances
// pinned inline. Returns nonzero if any criterion fails. Indented lines are
// diagnostics, not gates.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "codetree/attractor.hpp"
#include "codetree/config.hpp"
#include "codetree/examples.hpp"
#include "codetree/generators.hpp"
#include "codetree/pressure.hpp"
#include "codetree/rng.hpp"
#include "codetree/util.hpp"
#include "oracles.hpp"

using namespace codetree;

namespace {

int g_failures = 0;

void report(int idx, bool ok, const std::string& what) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", idx, what.c_str());
    if (!ok) ++g_failures;
}

void note(const std::string& s) { std::printf("    %s\n", s.c_str()); }

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

double report_value(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string prefix = key + " = ";
        if (line.rfind(prefix, 0) == 0) return std::stod(line.substr(prefix.size()));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// ---- criterion 1: Moran baseline through the CLI ---------------------------

void criterion1() {
    Timer tm;
    std::string out = "/tmp/acceptance_c1_out.txt";
    std::string cmd =
        std::string(CODETREE_CLI_PATH) + " dimzero example:sierpinski > " + out + " 2>&1";
    int status = std::system(cmd.c_str());
    double secs = tm.seconds();
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::string text = slurp(out);
    double z = report_value(text, "alpha_zero");
    double target = std::log(3.0) / std::log(2.0);
    bool ok = code == 0 && std::isfinite(z) && std::fabs(z - target) <= 1e-9 &&
              secs < 1.0;
    report(1, ok,
           "dimzero example:sierpinski -> " + fmt(z) + " vs log3/log2 (|err| = " +
               fmt(std::fabs(z - target)) + " <= 1e-9), " + fmt(secs) + " s < 1 s");
}

// ---- criterion 2: pressure1 closed form, proxies, proxy zeros --------------

void criterion2() {
    Timer tm;
    const double l2 = std::log(2.0);

    // closed-form clause under the literal geometric schedule N_l = 4^l
    RunConfig geo = example_catalog("pressure1").config;
    geo.generator.schedule = "geometric";
    auto tgeo = make_factory(geo)(0);
    auto neck_geo = [](std::size_t j) {
        std::size_t v = 1;
        for (; j > 0; --j) v *= 4;
        return v;
    };
    std::vector<std::size_t> all_k;
    for (std::size_t k = 1; k <= 4096; ++k) all_k.push_back(k);
    std::vector<double> alphas = {0.0, 0.25, 0.4, 0.75, 1.0, 1.5, 2.0};
    PressureCurve curve = pressure_curve(*tgeo, alphas, all_k);
    double worst = 0.0;
    for (std::size_t ai = 0; ai < alphas.size(); ++ai)
        for (std::size_t ki = 0; ki < all_k.size(); ++ki) {
            std::size_t k = all_k[ki];
            std::size_t nf = oracle::count_f_levels(k, neck_geo);
            double want =
                (double)(oracle::alternating_log_sum(k, alphas[ai], nf, k - nf) /
                         (long double)k);
            worst = std::max(worst, std::fabs(curve.at(ai, ki) - want));
        }
    bool ok_closed = worst <= 1e-12;

    // proxies and proxy zeros on the shipped fixture (supergeometric necks)
    NamedExample ex = example_catalog("pressure1");
    auto tsup = make_factory(ex.config)(0);
    double hint = alpha_max_hint(ex.config.catalog);
    auto est = pressure_estimates(*tsup, 0.4, ex.proxy_depths);
    double inf_want = (1.0 - 3.0 * 0.4) * l2;
    double sup_want = (1.0 - 2.0 * 0.4) * l2;
    bool ok_proxy = std::fabs(est.p_inf_hat - inf_want) <= 0.02 &&
                    std::fabs(est.p_sup_hat - sup_want) <= 0.02;
    AlphaZero zi = zero_of_pressure(
        [&](double a) { return pressure_estimates(*tsup, a, ex.proxy_depths).p_inf_hat; },
        hint);
    AlphaZero zs = zero_of_pressure(
        [&](double a) { return pressure_estimates(*tsup, a, ex.proxy_depths).p_sup_hat; },
        hint);
    bool ok_zeros =
        std::fabs(zi.alpha - 1.0 / 3.0) <= 0.01 && std::fabs(zs.alpha - 0.5) <= 0.01;

    // the literal schedule cannot reach the limit targets; show the gap
    AlphaZero gi = zero_of_pressure(
        [&](double a) { return pressure_estimates(*tgeo, a, ex.proxy_depths).p_inf_hat; },
        hint);
    AlphaZero gs = zero_of_pressure(
        [&](double a) { return pressure_estimates(*tgeo, a, ex.proxy_depths).p_sup_hat; },
        hint);

    double secs = tm.seconds();
    bool ok = ok_closed && ok_proxy && ok_zeros && secs < 5.0;
    report(2, ok,
           "pressure1: closed form |err| = " + fmt(worst) +
               " <= 1e-12 for all k <= 4096 (literal 4^l necks); proxies at 0.4 "
               "-> " +
               fmt(est.p_inf_hat) + "/" + fmt(est.p_sup_hat) + " vs " + fmt(inf_want) +
               "/" + fmt(sup_want) + " (tol 0.02); proxy zeros " + fmt(zi.alpha) + "/" +
               fmt(zs.alpha) + " vs 1/3, 1/2 (tol 0.01); " + fmt(secs) + " s < 5 s");
    note("limit clauses need fast necks: geometric 4^l proxy zeros stay at " +
         fmt(gi.alpha) + "/" + fmt(gs.alpha) + " (4^{j(j+1)/2} fixture shown above)");
}

// ---- criterion 3: pressure2 samples and zero --------------------------------

void criterion3() {
    NamedExample ex = example_catalog("pressure2");
    auto tree = make_factory(ex.config)(0);
    const std::size_t k = 4096;
    double lr = std::log(1.0 / 3.0);
    double worst = 0.0;
    for (double a = 0.0; a <= 1.5 + 1e-9; a += 0.25) {
        double got = log_partition_sum(*tree, a, k) / (double)k;
        worst = std::max(worst, std::fabs(got - (std::log(3.0) + a * lr)));
    }
    AlphaZero z = zero_of_pressure(
        [&](double a) { return log_partition_sum(*tree, a, k) / (double)k; },
        alpha_max_hint(ex.config.catalog));
    bool ok = worst <= 0.02 && std::fabs(z.alpha - 1.0) <= 1e-3;

    RunConfig geo = ex.config;
    geo.generator.schedule = "geometric";
    auto tg = make_factory(geo)(0);
    AlphaZero zg = zero_of_pressure(
        [&](double a) { return log_partition_sum(*tg, a, k) / (double)k; },
        alpha_max_hint(ex.config.catalog));

    report(3, ok,
           "pressure2: depth-4096 samples within " + fmt(worst) +
               " of log3 + alpha*log(1/3) on alpha in {0,0.25,..,1.5} (tol 0.02); "
               "zero " +
               fmt(z.alpha) + " vs 1.0 (|err| = " + fmt(std::fabs(z.alpha - 1.0)) +
               " <= 1e-3)");
    note("literal geometric 4^k necks leave the zero at " + fmt(zg.alpha) +
         " (F-level fraction does not vanish); fixture uses 4^{j(j+1)/2}");
}

// ---- criterion 4: pressure3 attractor and dyadic box slope ------------------

void criterion4() {
    auto tree = unit_fractions_tree();
    TranslationAssignment ta = unit_fractions_translations();
    PointCloud cloud = point_cloud(*tree, ta, 20);

    // every rendered point sits on {0} union {1/n}
    double worst_a = 0.0;
    for (const auto& p : cloud.points) {
        double x = p.x[0];
        double err = std::fabs(x);
        if (x > 1e-9) {
            double n = std::max(1.0, std::round(1.0 / x));
            err = std::min(err, std::fabs(x - 1.0 / n));
        }
        worst_a = std::max(worst_a, err);
    }
    // and every target with n <= 100 (plus 0) has a rendered point nearby
    std::vector<double> xs;
    xs.reserve(cloud.points.size());
    for (const auto& p : cloud.points) xs.push_back(p.x[0]);
    std::sort(xs.begin(), xs.end());
    auto nearest = [&](double t) {
        auto it = std::lower_bound(xs.begin(), xs.end(), t);
        double best = 1e9;
        if (it != xs.end()) best = std::min(best, std::fabs(*it - t));
        if (it != xs.begin()) best = std::min(best, std::fabs(*(it - 1) - t));
        return best;
    };
    double worst_b = nearest(0.0);
    for (int n = 1; n <= 100; ++n) worst_b = std::max(worst_b, nearest(1.0 / n));

    std::vector<double> scales;
    for (int j = 6; j <= 15; ++j) scales.push_back(std::pow(2.0, -j));
    BoxDimEstimate est = box_counting_dimension(cloud, scales);

    bool ok = worst_a <= 1e-4 && worst_b <= 1e-4 && std::fabs(est.slope - 0.5) <= 0.05;
    report(4, ok,
           "pressure3: depth-20 cloud matches {0} u {1/n} both ways (" + fmt(worst_a) +
               ", " + fmt(worst_b) + " <= 1e-4); dyadic box slope " + fmt(est.slope) +
               " vs 0.5 (tol 0.05)");
}

// ---- criterion 5: Markov pressure, Monte Carlo ------------------------------

void criterion5() {
    Timer tm;
    NamedExample ex = example_catalog("markov_ab");
    TreeFactory factory = make_factory(ex.config);
    const std::size_t trials = 10000, necks = 20000;
    const std::uint64_t seed = 20260815;

    // one frozen draw of 10^4 trees serves the whole alpha grid; evaluate()
    // is the kingman_pressure estimator on those trees (identity unit-tested)
    FrozenKingman frozen(factory, trials, necks, seed);
    bool ok_levels = true;
    std::string levels;
    for (double a : {0.25, 0.5, 0.75}) {
        MonteCarloEstimate mc = frozen.evaluate(a);
        double want = oracle::markov_ab_pressure(a);
        bool hit = std::fabs(mc.mean - want) <= 3.0 * mc.std_error;
        ok_levels = ok_levels && hit;
        levels += fmt((mc.mean - want) / mc.std_error) + "SE ";
    }

    double hint = alpha_max_hint(ex.config.catalog);
    AlphaZero z =
        zero_of_pressure([&](double a) { return frozen.evaluate(a).mean; }, hint);
    const double h = 0.02;
    double slope =
        (frozen.evaluate(z.alpha + h).mean - frozen.evaluate(z.alpha - h).mean) /
        (2.0 * h);
    double sigma = frozen.evaluate(z.alpha).std_error / std::max(std::fabs(slope), 1e-9);
    double target = std::log(6.0) / std::log(12.0);
    bool ok_zero = std::fabs(z.alpha - target) <= 3.0 * sigma;

    double secs = tm.seconds();
    bool ok = ok_levels && ok_zero && secs < 10.0;
    report(5, ok,
           "markov pressure: 10^4-trial estimates at alpha in {0.25,0.5,0.75} off by " +
               levels + "(all within 3 SE); alpha_0 = " + fmt(z.alpha) +
               " vs log6/log12 = " + fmt(target) + " (" +
               fmt(std::fabs(z.alpha - target) / std::max(sigma, 1e-300)) +
               " sigma <= 3); " + fmt(secs) + " s < 10 s");
}

// ---- criterion 6: V-variable consistency -------------------------------------

void criterion6() {
    NamedExample ex = example_catalog("vvariable_demo");
    const Catalog& cat = ex.config.catalog;

    auto t1 = vvariable_tree(cat, 1, derive(606, 0, 713).state);
    std::vector<int> fams;
    std::vector<int> prefix;
    for (std::size_t l = 0; l <= 18; ++l) {
        fams.push_back(t1->family_at(prefix));
        prefix.push_back(1);
    }
    auto homog = homogeneous_tree(cat, [fams](std::size_t level) {
        return fams[std::min(level, fams.size() - 1)];
    });
    bool bitwise = true;
    for (std::size_t k : {4u, 9u, 16u})
        for (double a : {0.0, 0.5, 1.0, 1.3})
            bitwise = bitwise && log_partition_sum(*t1, a, k) ==
                                     log_partition_sum(*homog, a, k);

    bool ok_v2 = true;
    std::string gaps;
    for (double a : {0.5, 1.0}) {
        auto salt = (std::uint64_t)std::llround(a * 100);
        auto sim =
            vvariable_similarity_pressure(cat, 2, {}, a, 4000, derive(606, salt, 711).state);
        auto king = kingman_pressure(make_factory(ex.config), a, 1500, 300,
                                     derive(606, salt, 712).state);
        double comb = std::sqrt(sim.std_error * sim.std_error +
                                king.std_error * king.std_error) +
                      sim.systematic + king.systematic;
        ok_v2 = ok_v2 && std::fabs(sim.mean - king.mean) <= 3.0 * comb;
        gaps += fmt(std::fabs(sim.mean - king.mean) / comb) + "SE ";
    }

    bool ok = bitwise && ok_v2;
    report(6, ok,
           std::string("V-variable: V=1 partition sums equal the homogeneous "
                       "generator bit-for-bit (k <= 16, 4 alphas) -> ") +
               (bitwise ? "exact" : "MISMATCH") +
               "; V=2 similarity vs kingman gaps " + gaps + "(all within 3 combined SE)");
}

// ---- criterion 7: property suites --------------------------------------------

Mat rnd_contraction(Stream& st, int d, double smax = 0.9) {
    for (;;) {
        Mat t = Mat::zero(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) t.at(i, j) = 2.0 * st.next_unit() - 1.0;
        if (std::fabs(t.det()) < 1e-6) continue;
        double s1 = singular_values(t).sigma[0];
        double scale = smax * (0.2 + 0.8 * st.next_unit()) / s1;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) t.at(i, j) *= scale;
        if (std::fabs(t.det()) < 1e-10) continue;
        return t;
    }
}

Catalog rnd_similitude_catalog(Stream& st, int dim) {
    Catalog cat;
    cat.dimension = dim;
    int nfam = 1 + (int)st.next_index(2);
    int slot = 0;
    for (int f = 0; f < nfam; ++f) {
        IFSFamily fam;
        fam.label = "F" + std::to_string(f);
        int maps = 2 + (int)st.next_index(2);
        for (int m = 0; m < maps; ++m) {
            double r = 0.2 + 0.4 * st.next_unit();
            fam.maps.push_back({Mat::identity(dim) * r, slot++});
        }
        cat.families.push_back(std::move(fam));
    }
    for (int s = 0; s < slot; ++s) cat.slots.push_back("s" + std::to_string(s));
    cat.validate();
    return cat;
}

Catalog rnd_affine_catalog(Stream& st, int maps_per_family) {
    Catalog cat;
    cat.dimension = 2;
    int slot = 0;
    for (int f = 0; f < 2; ++f) {
        IFSFamily fam;
        fam.label = "F" + std::to_string(f);
        for (int m = 0; m < maps_per_family; ++m)
            fam.maps.push_back({rnd_contraction(st, 2, 0.7), slot++});
        cat.families.push_back(std::move(fam));
    }
    for (int s = 0; s < slot; ++s) cat.slots.push_back("s" + std::to_string(s));
    cat.validate();
    return cat;
}

// exact log S(k, alpha) by walking every depth-k cylinder with long double
// 2x2 products and the reference singular value function; the product
// determinant is carried multiplicatively so the small singular value stays
// accurate for ill-conditioned products (sigma_2 = |det| / sigma_1)
long double enum_log_sum_oracle(const CodeTree& t, double alpha, std::size_t k) {
    std::vector<long double> terms;
    std::vector<int> prefix;
    std::array<long double, 4> id = {1, 0, 0, 1};
    std::function<void(std::size_t, const std::array<long double, 4>&, long double)> rec =
        [&](std::size_t depth, const std::array<long double, 4>& prod, long double det) {
            if (depth == k) {
                auto sv = oracle::svd2((double)prod[0], (double)prod[1], (double)prod[2],
                                       (double)prod[3]);
                long double s1 = sv.s1;
                long double s2 = s1 > 0 ? std::fabs(det) / s1 : 0.0L;
                terms.push_back(oracle::log_phi_from_sigma({s1, s2}, alpha));
                return;
            }
            int fam = t.family_at(prefix);
            const auto& maps = t.catalog().families[(std::size_t)fam].maps;
            for (std::size_t d = 1; d <= maps.size(); ++d) {
                const Mat& m = maps[d - 1].linear;
                std::array<long double, 4> np = {
                    prod[0] * m.at(0, 0) + prod[1] * m.at(1, 0),
                    prod[0] * m.at(0, 1) + prod[1] * m.at(1, 1),
                    prod[2] * m.at(0, 0) + prod[3] * m.at(1, 0),
                    prod[2] * m.at(0, 1) + prod[3] * m.at(1, 1)};
                prefix.push_back((int)d);
                rec(depth + 1, np, det * (long double)m.det());
                prefix.pop_back();
            }
        };
    rec(0, id, 1.0L);
    return oracle::lse(terms);
}

void criterion7() {
    Timer tm;
    std::vector<std::string> fails;

    {  // phi submultiplicative on [0, D]
        Stream st(7101);
        bool ok = true;
        for (int c = 0; c < 10000 && ok; ++c) {
            Mat t = rnd_contraction(st, 2), u = rnd_contraction(st, 2);
            double a = 2.0 * st.next_unit();
            ok = phi(t * u, a) <= phi(t, a) * phi(u, a) * (1 + 1e-12) + 1e-300;
        }
        if (!ok) fails.push_back("phi submultiplicativity");
    }
    {  // phi_lower supermultiplicative + lower-bound lemma, D = 2
        Stream st(7102);
        bool ok = true;
        for (int c = 0; c < 10000 && ok; ++c) {
            Mat t = rnd_contraction(st, 2), u = rnd_contraction(st, 2);
            double a = 2.0 * st.next_unit();
            ok = phi_lower(t * u, a) >=
                     phi_lower(t, a) * phi_lower(u, a) * (1 - 1e-12) - 1e-300 &&
                 phi(t * u, a) >= phi_lower(t, a) * phi(u, a) - 1e-12;
        }
        if (!ok) fails.push_back("phi_lower supermultiplicativity / lemma bound");
    }
    {  // sigma ordering, products/Frobenius identities, semi-axis norms
        Stream st(7103);
        bool ok = true;
        for (int c = 0; c < 10000 && ok; ++c) {
            int d = 2 + (int)st.next_index(2);
            Mat t = rnd_contraction(st, d);
            auto sd = singular_values(t);
            double frob = 0.0, det = std::fabs(t.det()), prod = 1.0, ss = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) frob += t.at(i, j) * t.at(i, j);
            for (int i = 0; i < d; ++i) {
                if (i + 1 < d && sd.sigma[i] < sd.sigma[i + 1] - 1e-15) ok = false;
                prod *= sd.sigma[i];
                ss += sd.sigma[i] * sd.sigma[i];
            }
            ok = ok && sd.sigma[d - 1] >= 0.0 && std::fabs(prod - det) <= 1e-10 &&
                 std::fabs(ss - frob) <= 1e-10;
            Vec u = Vec::zero(d);
            double n2 = 0.0;
            for (int i = 0; i < d; ++i) {
                u[i] = 2.0 * st.next_unit() - 1.0;
                n2 += u[i] * u[i];
            }
            if (n2 > 1e-12) {
                double len = (t * u).norm() / std::sqrt(n2);
                ok = ok && len <= sd.sigma[0] + 1e-10 && len >= sd.sigma[d - 1] - 1e-10;
            }
            if (d == 2) {
                auto ref = oracle::svd2(t.at(0, 0), t.at(0, 1), t.at(1, 0), t.at(1, 1));
                ok = ok && std::fabs(sd.sigma[0] - (double)ref.s1) <= 1e-10 &&
                     std::fabs(sd.sigma[1] - (double)ref.s2) <= 1e-10;
            }
        }
        if (!ok) fails.push_back("sigma ordering / semi-axis norms");
    }
    {  // alpha-monotonicity band of log S / k increments
        Stream st(7104);
        bool ok = true;
        for (int c = 0; c < 10000 && ok; ++c) {
            bool affine = c % 5 == 0;
            Catalog cat = affine ? rnd_affine_catalog(st, 2)
                                 : rnd_similitude_catalog(st, 1 + (int)st.next_index(2));
            std::vector<int> labels;
            for (int l = 0; l < 64; ++l)
                labels.push_back((int)st.next_index(cat.family_count()));
            auto tree = homogeneous_tree(cat, [labels](std::size_t l) {
                return labels[std::min(l, labels.size() - 1)];
            });
            std::size_t k = affine ? 1 + st.next_index(7) : 1 + st.next_index(40);
            double a = (affine ? 2.0 : 3.0) * st.next_unit();
            double b = a + 1e-3 + st.next_unit();
            if (affine) b = std::min(b, 2.0);
            if (b <= a) continue;
            double da = log_partition_sum(*tree, a, k);
            double db = log_partition_sum(*tree, b, k);
            double rate = (db - da) / ((b - a) * (double)k);
            ok = rate <= std::log(cat.sigma_upper) + 1e-7 &&
                 rate >= std::log(cat.sigma_lower) - 1e-7;
        }
        if (!ok) fails.push_back("alpha-monotonicity band");
    }
    {  // necks: all subtrees below a neck level coincide
        Stream st(7105);
        bool ok = true;
        for (int c = 0; c < 100 && ok; ++c) {
            Catalog cat = rnd_similitude_catalog(st, 1);
            auto tree = block_tree(cat, LengthDist::uniform_range(1, 3), st.next_u64());
            std::size_t n1 = tree->neck(1);
            Address a, b;
            a.digits.assign(n1, 1);
            std::vector<int> p;
            for (std::size_t l = 0; l < n1; ++l) {
                int fam = tree->family_at(p);
                int m = (int)cat.families[(std::size_t)fam].map_count();
                p.push_back(1 + (int)st.next_index((std::size_t)m));
            }
            b.digits = p;
            ok = subtree_equal(*tree, a, b, 6);
        }
        if (!ok) fails.push_back("neck subtree coincidence");
    }
    {  // shift arithmetic
        Stream st(7106);
        bool ok = true;
        for (int c = 0; c < 10000 && ok; ++c) {
            Catalog cat = rnd_similitude_catalog(st, 1);
            auto tree = block_tree(cat, LengthDist::uniform_range(1, 4), st.next_u64());
            auto shifted = shift_xi(tree);
            for (std::size_t m = 1; m <= 4 && ok; ++m)
                ok = shifted->neck(m) == tree->neck(m + 1) - tree->neck(1);
        }
        if (!ok) fails.push_back("shift neck arithmetic");
    }
    {  // natural measure weights normalize
        Stream st(7107);
        bool ok = true;
        for (int c = 0; c < 10000 && ok; ++c) {
            Catalog cat = rnd_similitude_catalog(st, 1);
            auto tree = block_tree(cat, LengthDist::uniform_range(1, 3), st.next_u64());
            TranslationAssignment ta = sample_translation(cat, 1.0, st.next_u64());
            double a = 2.0 * st.next_unit();
            std::size_t m = 1 + st.next_index(2);
            WeightedCloud wc = natural_measure(*tree, ta, a, m);
            double s = 0.0;
            for (double w : wc.weights) s += w;
            ok = std::fabs(s - 1.0) <= 1e-9;
        }
        if (!ok) fails.push_back("natural measure normalization");
    }
    {  // pressure brackets sandwich exact enumeration, affine 2x2
        Stream st(7108);
        bool ok = true;
        for (int c = 0; c < 10000 && ok; ++c) {
            Catalog cat = rnd_affine_catalog(st, 2);
            auto tree = block_tree(cat, LengthDist::uniform_range(1, 3), st.next_u64());
            std::size_t blocks = 1 + st.next_index(4);
            double a = 2.0 * st.next_unit();
            std::size_t nn = tree->neck(blocks);
            PressureBracket br = pressure_bracket(*tree, a, blocks);
            double exact = (double)(enum_log_sum_oracle(*tree, a, nn) / (long double)nn);
            ok = br.lower <= exact + 1e-9 && exact <= br.upper + 1e-9;
        }
        if (!ok) fails.push_back("pressure bracket sandwich");
    }

    double secs = tm.seconds();
    bool ok = fails.empty();
    std::string what = "property suites (10^4 cases each; 100 neck trees): ";
    if (ok)
        what += "submultiplicativity, supermultiplicativity + lemma bound, sigma "
                "ordering, monotonicity band, neck subtrees, shift arithmetic, "
                "measure normalization, bracket sandwich all hold (" +
                fmt(secs) + " s)";
    else {
        what += "FAILED:";
        for (const auto& f : fails) what += " " + f + ";";
    }
    report(7, ok, what);
}

// ---- criterion 8: theorem-scale soft check -----------------------------------

void criterion8() {
    Timer tm;
    NamedExample ex = example_catalog("markov_ab");
    TreeFactory factory = make_factory(ex.config);
    DimensionReport rep = dimension_experiment(factory, 1.0, 9, 20, 20260815);
    double secs = tm.seconds();
    double lo = *std::min_element(rep.slopes.begin(), rep.slopes.end());
    double hi = *std::max_element(rep.slopes.begin(), rep.slopes.end());
    bool ok = !rep.outside_hypotheses &&
              std::fabs(rep.mean_slope - rep.alpha_zero) <= 0.15 && secs < 300.0;
    report(8, ok,
           "dimension experiment (markov, 20 translations in B(0,1), depth 9): mean "
           "box slope " +
               fmt(rep.mean_slope) + " vs Monte Carlo alpha_0 " + fmt(rep.alpha_zero) +
               " (|gap| = " + fmt(std::fabs(rep.mean_slope - rep.alpha_zero)) +
               " <= 0.15, sigma_upper < 1/2 holds); " + fmt(secs) + " s < 300 s");
    note("per-translation slopes span [" + fmt(lo) + ", " + fmt(hi) + "], sd " +
         fmt(rep.slope_sd));
}

}  // namespace

int main() {
    worker_threads() = 1;
    std::printf("codetree acceptance gate\n");
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    std::printf("%d of 8 criteria passed\n", 8 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
