#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fharm/error.hpp"
#include "fharm/parallel.hpp"
#include "fharm/strata.hpp"

namespace fharm {

namespace {

constexpr double kGoldenAngle = 2.399963229728653;  // pi (3 - sqrt 5)
constexpr double kInvPhi = 0.6180339887498949;

// Samples of the unit ball grouped by orbit; y in blow-up coordinates.
struct Family {
    std::vector<Vec3> y;
    std::vector<double> w;
    std::vector<std::size_t> start{0};
    void close() { start.push_back(y.size()); }
    std::size_t orbits() const { return start.size() - 1; }
};

struct Defect {
    double ambient = 0.0;
    double projected = 0.0;
};

struct Sampling {
    int radial, translate, circle, sphere;
};

void tangent_basis(const Vec3& d, Vec3& e1, Vec3& e2) {
    const Vec3 helper = std::abs(d.x()) < 0.6 ? Vec3::UnitX() : (std::abs(d.y()) < 0.6 ? Vec3::UnitY() : Vec3::UnitZ());
    e1 = (helper - helper.dot(d) * d).normalized();
    e2 = d.cross(e1);
}

double radial_t(int i, int R) { return (i + 0.5) / R; }

std::vector<Vec3> ray_directions(int n, const Sampling& s) {
    std::vector<Vec3> dirs;
    if (n == 2) {
        for (int m = 0; m < s.circle; ++m) {
            const double a = 2.0 * M_PI * (m + 0.5) / s.circle;
            dirs.emplace_back(std::cos(a), std::sin(a), 0.0);
        }
    } else {
        for (int m = 0; m < s.sphere; ++m) {
            const double z = 1.0 - 2.0 * (m + 0.5) / s.sphere;
            const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = m * kGoldenAngle;
            dirs.emplace_back(rr * std::cos(phi), rr * std::sin(phi), z);
        }
    }
    return dirs;
}

// k = 0 (one orbit per ray) or k = n (a single orbit)
Family ray_family(int n, const Sampling& s, bool single) {
    Family f;
    for (const Vec3& w : ray_directions(n, s)) {
        for (int i = 0; i < s.radial; ++i) {
            const double t = radial_t(i, s.radial);
            f.y.push_back(t * w);
            f.w.push_back(std::pow(t, n - 1));
        }
        if (!single) f.close();
    }
    if (single) f.close();
    return f;
}

// n = 3, k = 1: half-planes {v a + t w : t > 0} for w on the circle a-perp
Family axis_family(const Vec3& a, const Sampling& s) {
    Vec3 e1, e2;
    tangent_basis(a, e1, e2);
    Family f;
    for (int m = 0; m < s.circle; ++m) {
        const double psi = 2.0 * M_PI * (m + 0.5) / s.circle;
        const Vec3 w = std::cos(psi) * e1 + std::sin(psi) * e2;
        for (int i = 0; i < s.radial; ++i) {
            const double t = radial_t(i, s.radial);
            const double L = std::sqrt(1.0 - t * t);
            for (int j = 0; j < s.translate; ++j) {
                const double v = -L + (j + 0.5) * 2.0 * L / s.translate;
                f.y.push_back(v * a + t * w);
                f.w.push_back(t * 2.0 * L / s.translate);
            }
        }
        f.close();
    }
    return f;
}

// k = n - 1: the two half-balls on either side of the hyperplane nu-perp
Family halfspace_family(int n, const Vec3& nu, const Sampling& s) {
    Family f;
    Vec3 e1, e2;
    if (n == 3) {
        tangent_basis(nu, e1, e2);
    } else {
        e1 = Vec3(-nu.y(), nu.x(), 0.0);
        e2 = Vec3::Zero();
    }
    for (int sign = -1; sign <= 1; sign += 2) {
        for (int i = 0; i < s.radial; ++i) {
            const double t = radial_t(i, s.radial);
            const double L = std::sqrt(1.0 - t * t);
            const double dv = 2.0 * L / s.translate;
            const Vec3 base = (sign * t) * nu;
            if (n == 2) {
                for (int a = 0; a < s.translate; ++a) {
                    const double v = -L + (a + 0.5) * dv;
                    f.y.push_back(base + v * e1);
                    f.w.push_back(dv);
                }
                continue;
            }
            for (int a = 0; a < s.translate; ++a)
                for (int b = 0; b < s.translate; ++b) {
                    const double va = -L + (a + 0.5) * dv, vb = -L + (b + 0.5) * dv;
                    if (va * va + vb * vb >= L * L) continue;
                    f.y.push_back(base + va * e1 + vb * e2);
                    f.w.push_back(dv * dv);
                }
        }
        f.close();
    }
    return f;
}

Defect evaluate(const SphereMap& u, const Vec3& x, double r, const Family& f, bool parallel = true) {
    const std::size_t m = f.orbits();
    std::vector<double> amb(m), proj(m), mass(m);
    auto body = [&](std::size_t b, std::size_t e) {
        for (std::size_t o = b; o < e; ++o) {
            Vec3 S = Vec3::Zero();
            double W = 0.0;
            for (std::size_t i = f.start[o]; i < f.start[o + 1]; ++i) {
                S += f.w[i] * u.sample(x + r * f.y[i]);
                W += f.w[i];
            }
            // |U| = 1, so sum w |U - m|^2 = W - |S|^2 / W and sum w |U - m/|m||^2 = 2 (W - |S|)
            const double s = S.norm();
            mass[o] = W;
            amb[o] = W > 0.0 ? std::max(0.0, W - s * s / W) : 0.0;
            proj[o] = std::max(0.0, 2.0 * (W - s));
        }
    };
    if (parallel)
        parallel_blocks(m, 1, body);
    else
        body(0, m);
    Defect d;
    double total = 0.0;
    for (std::size_t o = 0; o < m; ++o) {
        d.ambient += amb[o];
        d.projected += proj[o];
        total += mass[o];
    }
    if (total > 0.0) {
        d.ambient /= total;
        d.projected /= total;
    }
    return d;
}

Family plane_family(int n, int k, const Vec3& d, const Sampling& s) {
    if (n == 3 && k == 1) return axis_family(d, s);
    return halfspace_family(n, d, s);  // k = n - 1
}

Sampling full_sampling(const SymmetryOptions& o) {
    return {o.radial_samples, o.translate_samples, o.circle_orbits, o.sphere_orbits};
}

Sampling coarse_sampling(const SymmetryOptions& o) {
    return {std::max(4, o.radial_samples / 4), std::max(2, o.translate_samples / 4),
            std::max(8, o.circle_orbits / 4), std::max(16, o.sphere_orbits / 4)};
}

std::vector<Vec3> plane_candidates(int n, int N) {
    std::vector<Vec3> out;
    out.reserve(N);
    for (int i = 0; i < N; ++i) {
        if (n == 2) {
            // normal of the invariant line
            const double a = M_PI * (i + 0.5) / N;
            out.emplace_back(std::cos(a), std::sin(a), 0.0);
        } else {
            const double z = 1.0 - (i + 0.5) / N;
            const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = i * kGoldenAngle;
            out.emplace_back(rr * std::cos(phi), rr * std::sin(phi), z);
        }
    }
    return out;
}

// Golden-section search of f on [c - delta, c + delta]; returns the best
// point seen, never worse than c.
template <class F>
double golden(F&& f, double c, double fc, double delta, int steps, double& best) {
    double a = c - delta, b = c + delta;
    double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    double arg = c;
    best = fc;
    auto consider = [&](double xv, double fv) {
        if (fv < best) {
            best = fv;
            arg = xv;
        }
    };
    consider(x1, f1);
    consider(x2, f2);
    for (int s = 0; s < steps; ++s) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
            consider(x1, f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
            consider(x2, f2);
        }
    }
    return arg;
}

struct Searched {
    Defect defect;
    Vec3 direction = Vec3::Zero();
};

Searched plane_search(const SphereMap& u, const Vec3& x, double r, int k, const SymmetryOptions& opt) {
    const int n = u.domain().n_dim;
    const int N = opt.plane_candidates;
    const auto cands = plane_candidates(n, N);
    const Sampling coarse = coarse_sampling(opt), fine = full_sampling(opt);
    std::vector<double> scan(cands.size());
    parallel_blocks(cands.size(), 8, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            scan[i] = evaluate(u, x, r, plane_family(n, k, cands[i], coarse), false).ambient;
    });
    std::vector<std::size_t> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t keep = std::min<std::size_t>(2, order.size());
    std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                      [&](std::size_t a, std::size_t b) { return scan[a] < scan[b] || (scan[a] == scan[b] && a < b); });

    Searched best;
    best.defect.ambient = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < keep; ++c) {
        const Vec3 d0 = cands[order[c]];
        Vec3 dir = d0;
        double fbest = 0.0;
        if (n == 2) {
            const double theta0 = std::atan2(d0.y(), d0.x());
            auto at = [&](double th) { return Vec3(std::cos(th), std::sin(th), 0.0); };
            auto f = [&](double th) { return evaluate(u, x, r, plane_family(n, k, at(th), fine)).ambient; };
            const double th = golden(f, theta0, f(theta0), 2.0 * M_PI / N, opt.golden_steps, fbest);
            dir = at(th);
        } else {
            Vec3 e1, e2;
            tangent_basis(d0, e1, e2);
            auto at = [&](double a, double b) { return (d0 + a * e1 + b * e2).normalized(); };
            double a = 0.0, b = 0.0;
            fbest = evaluate(u, x, r, plane_family(n, k, d0, fine)).ambient;
            double delta = 2.0 * std::sqrt(2.0 * M_PI / N);
            const int per = std::max(1, opt.golden_steps / 4);
            for (int round = 0; round < 2; ++round) {
                a = golden([&](double t) { return evaluate(u, x, r, plane_family(n, k, at(t, b), fine)).ambient; },
                           a, fbest, delta, per, fbest);
                b = golden([&](double t) { return evaluate(u, x, r, plane_family(n, k, at(a, t), fine)).ambient; },
                           b, fbest, delta, per, fbest);
                delta *= 2.0 * std::pow(kInvPhi, per);
            }
            dir = at(a, b);
        }
        if (fbest < best.defect.ambient) {
            best.defect = evaluate(u, x, r, plane_family(n, k, dir, fine));
            best.direction = dir;
        }
    }
    return best;
}

void check_inputs(const SphereMap& u, const Vec3& x, double r, int k, const SymmetryOptions& opt) {
    const int n = u.domain().n_dim;
    if (k < 0 || k > n) throw DomainError("symmetry dimension k out of range");
    if (!(r > 0.0)) throw DomainError("radius must be positive");
    if (!u.domain().contains_ball(x, r)) throw DomainError("ball leaves the domain");
    if (opt.radial_samples < 8) throw ResolutionError("fewer than 8 samples per orbit");
    if (k > 0 && k < n && opt.radial_samples * opt.translate_samples < 8)
        throw ResolutionError("fewer than 8 samples per orbit");
    if (opt.plane_candidates < 1 || opt.golden_steps < 0 || opt.translate_samples < 1 ||
        opt.circle_orbits < 1 || opt.sphere_orbits < 1)
        throw DomainError("invalid symmetry sampling options");
}

SymmetryDefect raw_defect(const SphereMap& u, const Vec3& x, double r, int k, const SymmetryOptions& opt) {
    const int n = u.domain().n_dim;
    SymmetryDefect out;
    out.k = k;
    Searched s;
    if (k == 0 || k == n) {
        s.defect = evaluate(u, x, r, ray_family(n, full_sampling(opt), k == n));
    } else {
        s = plane_search(u, x, r, k, opt);
    }
    out.ambient = s.defect.ambient;
    out.projected = s.defect.projected;
    out.direction = s.direction;
    return out;
}

}  // namespace

SymmetryDefect symmetry_defect(const SphereMap& u, const Vec3& x, double r, int k, const SymmetryOptions& opt) {
    check_inputs(u, x, r, k, opt);
    return raw_defect(u, x, r, k, opt);
}

std::vector<SymmetryDefect> symmetry_defects(const SphereMap& u, const Vec3& x, double r,
                                             const SymmetryOptions& opt) {
    const int n = u.domain().n_dim;
    check_inputs(u, x, r, 0, opt);
    std::vector<SymmetryDefect> out;
    for (int k = 0; k <= n; ++k) out.push_back(raw_defect(u, x, r, k, opt));
    for (int k = n - 1; k >= 0; --k) {
        out[k].ambient = std::min(out[k].ambient, out[k + 1].ambient);
        out[k].projected = std::min(out[k].projected, out[k + 1].projected);
    }
    return out;
}

StratumReport stratum_report(const SphereMap& u, const Vec3& x, double s_max, double s_min,
                             const SymmetryOptions& opt) {
    if (!(s_max > 0.0 && s_min > 0.0 && s_min <= s_max)) throw DomainError("invalid scale range");
    StratumReport rep;
    rep.x = x;
    rep.n_dim = u.domain().n_dim;
    for (double s = s_max; s >= s_min * (1 - 1e-12); s *= 0.5) {
        rep.scales.push_back(s);
        rep.defects.push_back(symmetry_defects(u, x, s, opt));
    }
    return rep;
}

bool stratum_membership(const StratumReport& rep, int k, double eps, double r) {
    if (k < 0 || k > rep.n_dim) throw DomainError("stratum dimension out of range");
    if (k == rep.n_dim) return true;
    for (std::size_t j = 0; j < rep.scales.size(); ++j) {
        if (rep.scales[j] < r * (1 - 1e-12)) continue;
        if (rep.defects[j][k + 1].ambient <= eps) return false;
    }
    return true;
}

}  // namespace fharm
