#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <vector>

#include "codetree/errors.hpp"

namespace codetree {

inline constexpr int kMaxDim = 4;
inline constexpr double kSingularTol = 1e-14;
inline constexpr double kParallelTol = 1e-9;  // angle threshold, radians

struct Vec {
    int d = 0;
    std::array<double, kMaxDim> x{};

    double& operator[](int i) { return x[(std::size_t)i]; }
    double operator[](int i) const { return x[(std::size_t)i]; }

    static Vec zero(int d) {
        Vec v;
        v.d = d;
        return v;
    }

    static Vec of(int d, std::initializer_list<double> vals) {
        Vec v = zero(d);
        int i = 0;
        for (double a : vals) v.x[(std::size_t)i++] = a;
        return v;
    }

    static Vec unit(int d, int axis) {
        Vec v = zero(d);
        v.x[(std::size_t)axis] = 1.0;
        return v;
    }

    double norm2() const {
        double s = 0;
        for (int i = 0; i < d; ++i) s += x[(std::size_t)i] * x[(std::size_t)i];
        return s;
    }
    double norm() const { return std::sqrt(norm2()); }

    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < d; ++i) x[(std::size_t)i] += o.x[(std::size_t)i];
        return *this;
    }
    Vec operator+(const Vec& o) const {
        Vec r = *this;
        r += o;
        return r;
    }
    Vec operator-(const Vec& o) const {
        Vec r = *this;
        for (int i = 0; i < d; ++i) r.x[(std::size_t)i] -= o.x[(std::size_t)i];
        return r;
    }
    Vec operator*(double c) const {
        Vec r = *this;
        for (int i = 0; i < d; ++i) r.x[(std::size_t)i] *= c;
        return r;
    }
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (int i = 0; i < a.d; ++i) s += a[i] * b[i];
    return s;
}

struct Mat {
    int d = 0;
    std::array<double, kMaxDim * kMaxDim> a{};

    double& at(int i, int j) { return a[(std::size_t)(i * d + j)]; }
    double at(int i, int j) const { return a[(std::size_t)(i * d + j)]; }

    static Mat zero(int d) {
        Mat m;
        m.d = d;
        return m;
    }
    static Mat identity(int d) {
        Mat m = zero(d);
        for (int i = 0; i < d; ++i) m.at(i, i) = 1.0;
        return m;
    }
    static Mat of(int d, std::initializer_list<double> vals) {
        Mat m = zero(d);
        int i = 0;
        for (double v : vals) m.a[(std::size_t)i++] = v;
        return m;
    }

    Mat operator*(const Mat& o) const {
        Mat r = zero(d);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) {
                double t = at(i, k);
                for (int j = 0; j < d; ++j) r.at(i, j) += t * o.at(k, j);
            }
        return r;
    }

    Vec operator*(const Vec& v) const {
        Vec r = Vec::zero(d);
        for (int i = 0; i < d; ++i) {
            double s = 0;
            for (int j = 0; j < d; ++j) s += at(i, j) * v[j];
            r[i] = s;
        }
        return r;
    }

    Mat operator*(double c) const {
        Mat r = *this;
        for (auto& v : r.a) v *= c;
        return r;
    }

    Mat transpose() const {
        Mat r = zero(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) r.at(i, j) = at(j, i);
        return r;
    }

    double det() const {
        switch (d) {
            case 1:
                return a[0];
            case 2:
                return a[0] * a[3] - a[1] * a[2];
            case 3:
                return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
                       at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
                       at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
            case 4: {
                double det4 = 0;
                for (int c = 0; c < 4; ++c) {
                    Mat minor = Mat::zero(3);
                    for (int i = 1; i < 4; ++i) {
                        int jj = 0;
                        for (int j = 0; j < 4; ++j) {
                            if (j == c) continue;
                            minor.at(i - 1, jj++) = at(i, j);
                        }
                    }
                    det4 += ((c % 2) ? -1.0 : 1.0) * at(0, c) * minor.det();
                }
                return det4;
            }
            default:
                throw DimensionUnsupported("matrix dimension must be 1..4");
        }
    }
};

inline Mat rotation2(double theta) {
    Mat r = Mat::zero(2);
    r.at(0, 0) = std::cos(theta);
    r.at(0, 1) = -std::sin(theta);
    r.at(1, 0) = std::sin(theta);
    r.at(1, 1) = std::cos(theta);
    return r;
}

struct SingularData {
    int d = 0;
    std::array<double, kMaxDim> sigma{};  // nonincreasing
    std::array<Vec, kMaxDim> v;           // right singular unit vectors
    std::array<Vec, kMaxDim> w;           // images T(v_i), |w_i| = sigma_i
};

namespace detail {

inline void canonical_sign(Vec& v, Vec& w) {
    for (int i = 0; i < v.d; ++i) {
        if (v[i] > 0) return;
        if (v[i] < 0) {
            v = v * -1.0;
            w = w * -1.0;
            return;
        }
    }
}

inline SingularData svd2(const Mat& t) {
    double a = t.at(0, 0) * t.at(0, 0) + t.at(1, 0) * t.at(1, 0);
    double b = t.at(0, 0) * t.at(0, 1) + t.at(1, 0) * t.at(1, 1);
    double c = t.at(0, 1) * t.at(0, 1) + t.at(1, 1) * t.at(1, 1);
    double mean = 0.5 * (a + c);
    double h = std::hypot(0.5 * (a - c), b);
    double detT = t.det();
    double l1 = mean + h;
    SingularData sd;
    sd.d = 2;
    sd.sigma[0] = std::sqrt(l1);
    sd.sigma[1] = std::fabs(detT) / sd.sigma[0];  // stable small eigenvalue

    if (h <= 1e-15 * mean) {
        sd.v[0] = Vec::unit(2, 0);
        sd.v[1] = Vec::unit(2, 1);
    } else {
        Vec c1 = Vec::of(2, {b, l1 - a});
        Vec c2 = Vec::of(2, {l1 - c, b});
        Vec v1 = (c1.norm2() >= c2.norm2()) ? c1 : c2;
        double n = v1.norm();
        v1 = v1 * (1.0 / n);
        sd.v[0] = v1;
        sd.v[1] = Vec::of(2, {-v1[1], v1[0]});
    }
    for (int i = 0; i < 2; ++i) {
        sd.w[i] = t * sd.v[i];
        canonical_sign(sd.v[i], sd.w[i]);
    }
    return sd;
}

// One-sided Jacobi: orthogonalize the columns of T by right rotations. Works
// on T directly, so small singular values keep their relative accuracy.
inline SingularData svd_jacobi(const Mat& t) {
    int d = t.d;
    std::array<Vec, kMaxDim> u;  // columns of T * V
    std::array<Vec, kMaxDim> vv;
    for (int j = 0; j < d; ++j) {
        u[(std::size_t)j] = Vec::zero(d);
        for (int i = 0; i < d; ++i) u[(std::size_t)j][i] = t.at(i, j);
        vv[(std::size_t)j] = Vec::unit(d, j);
    }
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool changed = false;
        for (int p = 0; p < d - 1; ++p)
            for (int q = p + 1; q < d; ++q) {
                double app = u[(std::size_t)p].norm2();
                double aqq = u[(std::size_t)q].norm2();
                double apq = dot(u[(std::size_t)p], u[(std::size_t)q]);
                if (std::fabs(apq) <= 1e-15 * std::sqrt(app * aqq) + 1e-300)
                    continue;
                double zeta = (aqq - app) / (2.0 * apq);
                double tt = (zeta >= 0 ? 1.0 : -1.0) /
                            (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double cs = 1.0 / std::sqrt(1.0 + tt * tt);
                double sn = cs * tt;
                for (int i = 0; i < d; ++i) {
                    double up = u[(std::size_t)p][i], uq = u[(std::size_t)q][i];
                    u[(std::size_t)p][i] = cs * up - sn * uq;
                    u[(std::size_t)q][i] = sn * up + cs * uq;
                    double vp = vv[(std::size_t)p][i], vq = vv[(std::size_t)q][i];
                    vv[(std::size_t)p][i] = cs * vp - sn * vq;
                    vv[(std::size_t)q][i] = sn * vp + cs * vq;
                }
                changed = true;
            }
        if (!changed) break;
    }
    std::array<int, kMaxDim> order{};
    for (int i = 0; i < d; ++i) order[(std::size_t)i] = i;
    std::sort(order.begin(), order.begin() + d, [&](int i, int j) {
        return u[(std::size_t)i].norm2() > u[(std::size_t)j].norm2();
    });
    SingularData sd;
    sd.d = d;
    for (int i = 0; i < d; ++i) {
        int j = order[(std::size_t)i];
        sd.sigma[(std::size_t)i] = u[(std::size_t)j].norm();
        sd.v[(std::size_t)i] = vv[(std::size_t)j];
        sd.w[(std::size_t)i] = u[(std::size_t)j];
        canonical_sign(sd.v[(std::size_t)i], sd.w[(std::size_t)i]);
    }
    return sd;
}

}  // namespace detail

// No singularity guard: long products of contractions have legitimately tiny
// determinants, so partition-sum internals call this directly.
inline SingularData singular_values_raw(const Mat& t) {
    if (t.d < 1 || t.d > kMaxDim)
        throw DimensionUnsupported("matrix dimension must be 1..4");
    if (t.d == 1) {
        SingularData sd;
        sd.d = 1;
        sd.sigma[0] = std::fabs(t.a[0]);
        sd.v[0] = Vec::unit(1, 0);
        sd.w[0] = Vec::of(1, {t.a[0]});
        detail::canonical_sign(sd.v[0], sd.w[0]);
        return sd;
    }
    if (t.d == 2) return detail::svd2(t);
    return detail::svd_jacobi(t);
}

inline SingularData singular_values(const Mat& t) {
    if (t.d < 1 || t.d > kMaxDim)
        throw DimensionUnsupported("matrix dimension must be 1..4");
    if (std::fabs(t.det()) <= kSingularTol)
        throw SingularMatrix("matrix is singular (|det| <= 1e-14)");
    return singular_values_raw(t);
}

inline double log_phi_sigmas(const double* sigma, int d, double alpha) {
    if (alpha < 0) throw NegativeAlpha("phi requires alpha >= 0");
    int m = (alpha >= (double)d) ? d : (int)std::floor(alpha) + 1;
    if (m < 1) m = 1;
    if (m > d) m = d;
    double lp = 0;
    for (int i = 0; i + 1 < m; ++i) lp += std::log(sigma[i]);
    lp += (alpha - (double)(m - 1)) * std::log(sigma[m - 1]);
    return lp;
}

inline double log_phi(const SingularData& sd, double alpha) {
    return log_phi_sigmas(sd.sigma.data(), sd.d, alpha);
}

inline double log_phi(const Mat& t, double alpha) {
    return log_phi(singular_values(t), alpha);
}

inline double phi(const Mat& t, double alpha) { return std::exp(log_phi(t, alpha)); }

inline double log_phi_lower(const SingularData& sd, double alpha) {
    if (sd.d != 2) throw DimensionUnsupported("phi_lower is defined for D = 2");
    if (alpha < 0 || alpha > 2)
        throw AlphaOutOfRange("phi_lower requires alpha in [0, 2]");
    if (alpha <= 1.0) return alpha * std::log(sd.sigma[1]);
    return std::log(sd.sigma[1]) + (alpha - 1.0) * std::log(sd.sigma[0]);
}

inline double log_phi_lower(const Mat& t, double alpha) {
    return log_phi_lower(singular_values(t), alpha);
}

inline double phi_lower(const Mat& t, double alpha) {
    return std::exp(log_phi_lower(t, alpha));
}

inline bool is_similitude(const Mat& t, double tol = 1e-12) {
    auto sd = singular_values(t);
    return sd.sigma[0] - sd.sigma[sd.d - 1] <= tol;
}

namespace detail {

inline double line_angle2(const Vec& a, const Vec& b) {
    double cross = std::fabs(a[0] * b[1] - a[1] * b[0]);
    double dp = std::fabs(a[0] * b[0] + a[1] * b[1]);
    return std::atan2(cross, dp);
}

inline Mat inverse2(const Mat& t) {
    double dt = t.det();
    Mat r = Mat::zero(2);
    r.at(0, 0) = t.at(1, 1) / dt;
    r.at(0, 1) = -t.at(0, 1) / dt;
    r.at(1, 0) = -t.at(1, 0) / dt;
    r.at(1, 1) = t.at(0, 0) / dt;
    return r;
}

}  // namespace detail

// Tests whether some direction v has all images T_i(v) pairwise parallel
// (within kParallelTol). Candidates are the real eigendirections of
// T_1^{-1} T_j for the first pair that is not a scalar multiple of identity.
inline std::optional<Vec> check_parallel_family(const std::vector<Mat>& maps) {
    if (maps.empty()) throw ConfigError("check_parallel_family: empty family");
    for (const auto& m : maps) {
        if (m.d != 2)
            throw DimensionUnsupported("check_parallel_family is defined for D = 2");
        if (std::fabs(m.det()) <= kSingularTol)
            throw SingularMatrix("check_parallel_family: singular map");
    }
    if (maps.size() == 1) return Vec::unit(2, 0);

    std::vector<Vec> candidates;
    for (std::size_t j = 1; j < maps.size() && candidates.empty(); ++j) {
        Mat b = detail::inverse2(maps[0]) * maps[j];
        double scale = 0;
        for (double e : {b.at(0, 0), b.at(0, 1), b.at(1, 0), b.at(1, 1)})
            scale = std::max(scale, std::fabs(e));
        bool scalar = std::fabs(b.at(0, 1)) <= 1e-12 * scale &&
                      std::fabs(b.at(1, 0)) <= 1e-12 * scale &&
                      std::fabs(b.at(0, 0) - b.at(1, 1)) <= 1e-12 * scale;
        if (scalar) continue;
        double p = b.at(0, 0), q = b.at(0, 1), r = b.at(1, 0), s = b.at(1, 1);
        double disc = 0.25 * (p - s) * (p - s) + q * r;
        if (disc < 0) return std::nullopt;  // no real eigendirection for this pair
        double root = std::sqrt(disc);
        for (double lambda : {0.5 * (p + s) + root, 0.5 * (p + s) - root}) {
            Vec c1 = Vec::of(2, {q, lambda - p});
            Vec c2 = Vec::of(2, {lambda - s, r});
            Vec v = (c1.norm2() >= c2.norm2()) ? c1 : c2;
            double n = v.norm();
            if (n <= 1e-300) continue;
            candidates.push_back(v * (1.0 / n));
        }
    }
    if (candidates.empty()) return Vec::unit(2, 0);  // all pairs scalar multiples

    std::optional<Vec> best;
    for (Vec v : candidates) {
        bool ok = true;
        for (std::size_t i = 0; i < maps.size() && ok; ++i)
            for (std::size_t j = i + 1; j < maps.size() && ok; ++j)
                if (detail::line_angle2(maps[i] * v, maps[j] * v) >= kParallelTol)
                    ok = false;
        if (!ok) continue;
        Vec w = v;
        detail::canonical_sign(v, w);
        if (!best || v[0] > (*best)[0] + 1e-15 ||
            (std::fabs(v[0] - (*best)[0]) <= 1e-15 && v[1] > (*best)[1]))
            best = v;
    }
    return best;
}

}  // namespace codetree
