#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fharm/grid.hpp"

namespace oracle {

using fharm::Vec3;

struct Cloud {
    std::vector<Vec3> pts;
    std::vector<double> w;
};

// r^{-2-k} sum w d^2(y, L) for the affine k-plane through c spanned by the
// orthonormal vectors in basis (n = 3)
inline double plane_cost(const Cloud& c, const Vec3& p0, const std::vector<Vec3>& basis, double r, int k) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.pts.size(); ++i) {
        Vec3 d = c.pts[i] - p0;
        for (const Vec3& b : basis) d -= d.dot(b) * b;
        s += c.w[i] * d.squaredNorm();
    }
    return s * std::pow(r, -2.0 - k);
}

inline Vec3 orthogonal_to(const Vec3& v) {
    Vec3 a = std::abs(v.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    return (a - a.dot(v) * v).normalized();
}

// basis of the k-plane described by a unit direction: the line itself for
// k = 1, the orthogonal complement of the normal for k = 2
inline std::vector<Vec3> plane_basis(const Vec3& dir, int k) {
    if (k == 0) return {};
    if (k == 1) return {dir};
    const Vec3 a = orthogonal_to(dir);
    return {a, dir.cross(a).normalized()};
}

// Brute-force beta in R^3: random search over positions (k = 0) or over
// directions of planes through the weighted mean (k = 1, 2), followed by a
// shrinking random hill climb. Returns beta (not squared).
inline double brute_beta(const Cloud& c, double r, int k, std::uint64_t seed, int candidates = 100000) {
    double W = 0.0;
    Vec3 m = Vec3::Zero();
    for (std::size_t i = 0; i < c.pts.size(); ++i) {
        W += c.w[i];
        m += c.w[i] * c.pts[i];
    }
    if (W == 0.0) return 0.0;
    m /= W;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    auto dir = [&]() {
        Vec3 v(N(rng), N(rng), N(rng));
        return Vec3(v.normalized());
    };
    Vec3 best_p = m, best_d = Vec3::UnitX();
    double best = 1e300;
    if (k == 0) {
        // the optimal point is not assumed: sample around the cloud
        double spread = 0.0;
        for (const Vec3& p : c.pts) spread = std::max(spread, (p - m).norm());
        for (int i = 0; i < candidates; ++i) {
            const Vec3 p = c.pts[i % c.pts.size()] + spread * Vec3(N(rng), N(rng), N(rng)) * 0.5;
            const double v = plane_cost(c, p, {}, r, 0);
            if (v < best) {
                best = v;
                best_p = p;
            }
        }
        double step = spread;
        while (step > 1e-9) {
            bool moved = false;
            for (int t = 0; t < 60; ++t) {
                const Vec3 p = best_p + step * Vec3(N(rng), N(rng), N(rng));
                const double v = plane_cost(c, p, {}, r, 0);
                if (v < best) {
                    best = v;
                    best_p = p;
                    moved = true;
                }
            }
            if (!moved) step *= 0.5;
        }
        return std::sqrt(best);
    }
    for (int i = 0; i < candidates; ++i) {
        const Vec3 d = dir();
        const double v = plane_cost(c, m, plane_basis(d, k), r, k);
        if (v < best) {
            best = v;
            best_d = d;
        }
    }
    double step = 0.05;
    while (step > 1e-9) {
        bool moved = false;
        for (int t = 0; t < 60; ++t) {
            const Vec3 d = (best_d + step * Vec3(N(rng), N(rng), N(rng))).normalized();
            const double v = plane_cost(c, m, plane_basis(d, k), r, k);
            if (v < best) {
                best = v;
                best_d = d;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
    }
    return std::sqrt(best);
}

// beta for k = 1 in the plane from the closed-form smaller eigenvalue of the
// 2 x 2 weighted covariance about the weighted mean
inline double beta_line_2d(const std::vector<Vec3>& pts, const std::vector<double>& w, const Vec3& x, double r) {
    double W = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if ((pts[i] - x).head(2).norm() > r * (1 + 1e-12)) continue;
        W += w[i];
        mx += w[i] * pts[i].x();
        my += w[i] * pts[i].y();
    }
    if (W == 0.0) return 0.0;
    mx /= W;
    my /= W;
    double a = 0.0, b = 0.0, d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if ((pts[i] - x).head(2).norm() > r * (1 + 1e-12)) continue;
        const double u = pts[i].x() - mx, v = pts[i].y() - my;
        a += w[i] * u * u;
        b += w[i] * u * v;
        d += w[i] * v * v;
    }
    const double lam = 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return std::sqrt(std::max(0.0, lam) * std::pow(r, -3.0));
}

}  // namespace oracle
