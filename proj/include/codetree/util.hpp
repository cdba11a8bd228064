#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace codetree {

// Neumaier compensated summation. Partition sums at depth 4096 have to match
// closed forms to 1e-12, which plain accumulation does not reliably deliver.
struct NeumaierSum {
    double s = 0.0;
    double c = 0.0;

    void add(double x) {
        double t = s + x;
        if (std::fabs(s) >= std::fabs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }

    double value() const { return s + c; }
};

// Streaming log(sum(exp(x_i))) with compensated accumulation.
struct LogSumExp {
    double max_x = -std::numeric_limits<double>::infinity();
    NeumaierSum sum;

    void add(double x) {
        if (x == -std::numeric_limits<double>::infinity()) return;
        if (x <= max_x) {
            sum.add(std::exp(x - max_x));
        } else {
            if (max_x != -std::numeric_limits<double>::infinity()) {
                double scaled = sum.value() * std::exp(max_x - x);
                sum = NeumaierSum{};
                sum.add(scaled);
            }
            max_x = x;
            sum.add(1.0);
        }
    }

    void merge(const LogSumExp& other) {
        if (other.empty()) return;
        if (empty()) {
            *this = other;
            return;
        }
        if (other.max_x <= max_x) {
            sum.add(other.sum.value() * std::exp(other.max_x - max_x));
        } else {
            double scaled = sum.value() * std::exp(max_x - other.max_x);
            max_x = other.max_x;
            NeumaierSum ns;
            ns.add(other.sum.value());
            ns.add(scaled);
            sum = ns;
        }
    }

    bool empty() const { return max_x == -std::numeric_limits<double>::infinity(); }

    double value() const {
        if (empty()) return -std::numeric_limits<double>::infinity();
        return max_x + std::log(sum.value());
    }
};

struct MeanVar {
    std::size_t n = 0;
    NeumaierSum sx, sxx;

    void add(double x) {
        ++n;
        sx.add(x);
        sxx.add(x * x);
    }

    double mean() const { return n ? sx.value() / (double)n : 0.0; }
    double variance() const {
        if (n < 2) return 0.0;
        double m = mean();
        double v = (sxx.value() - (double)n * m * m) / (double)(n - 1);
        return v > 0 ? v : 0.0;
    }
    double std_error() const { return n ? std::sqrt(variance() / (double)n) : 0.0; }
};

struct LsqFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

inline LsqFit lsq_fit(const std::vector<double>& x, const std::vector<double>& y) {
    double n = (double)x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    LsqFit f;
    double denom = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

// Global worker count for parallel reductions.  Results are required to be
// identical for every value, so this only trades wall time.
inline int& worker_threads() {
    static int n = 1;
    return n;
}

}  // namespace codetree
