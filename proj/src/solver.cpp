#include "fharm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fharm/error.hpp"
#include "fharm/parallel.hpp"

namespace fharm {

namespace {

constexpr std::size_t kBlock = 2048;

// per-cell F and F_p at the plain edge-difference |grad u|^2
void cell_terms(const SphereMap& u, const IntegrandModel& model, std::vector<double>& F,
                std::vector<double>& Fp) {
    const std::vector<double> g = gradient_sq(u);
    F.resize(g.size());
    Fp.resize(g.size());
    const auto& mask = u.cell_mask();
    parallel_blocks(g.size(), kBlock, [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
            if (!mask[c]) {
                F[c] = Fp[c] = 0.0;
                continue;
            }
            const IntegrandValues v = model.values(g[c]);
            F[c] = v.F;
            Fp[c] = v.Fp;
        }
    });
}

}  // namespace

double discrete_energy(const SphereMap& u, const IntegrandModel& model) {
    std::vector<double> F, Fp;
    cell_terms(u, model, F, Fp);
    return u.domain().cell_volume() * parallel_sum(F.size(), [&](std::size_t c) { return F[c]; });
}

double discrete_energy_gradient(const SphereMap& u, const IntegrandModel& model,
                                std::vector<Vec3>& grad) {
    const auto& d = u.domain();
    std::vector<double> F, Fp;
    cell_terms(u, model, F, Fp);
    const double vol = d.cell_volume();
    const double energy = vol * parallel_sum(F.size(), [&](std::size_t c) { return F[c]; });
    const double w = d.n_dim == 3 ? 0.25 : 0.5;
    const double coef = vol * 2.0 * w / (d.spacing * d.spacing);
    grad.assign(d.node_count(), Vec3::Zero());
    const auto& kind = u.node_kind();
    const auto cd = d.cell_dims();
    const int kz = d.n_dim == 3 ? 2 : 1;
    const std::size_t sx = std::size_t(d.dims[1]) * d.dims[2], sy = d.dims[2];
    const std::size_t stride[3] = {sx, sy, 1};
    parallel_blocks(d.node_count(), kBlock, [&](std::size_t b, std::size_t e) {
        for (std::size_t idx = b; idx < e; ++idx) {
            if (kind[idx] != NodeKind::Interior) continue;
            const int k = int(idx % d.dims[2]);
            const int j = int((idx / d.dims[2]) % d.dims[1]);
            const int i = int(idx / sx);
            const Vec3& ui = u.value(idx);
            Vec3 gsum = Vec3::Zero();
            for (int dx = 0; dx < 2; ++dx)
                for (int dy = 0; dy < 2; ++dy)
                    for (int dz = 0; dz < kz; ++dz) {
                        const int ci = i - dx, cj = j - dy, ck = k - dz;
                        if (ci < 0 || cj < 0 || ck < 0 || ci >= cd[0] || cj >= cd[1] || ck >= cd[2]) continue;
                        const double fp = Fp[d.cell_index(ci, cj, ck)];
                        if (fp == 0.0) continue;
                        const int off[3] = {dx, dy, dz};
                        Vec3 s = Vec3::Zero();
                        for (int a = 0; a < d.n_dim; ++a) {
                            const std::size_t nb = off[a] ? idx - stride[a] : idx + stride[a];
                            s += ui - u.value(nb);
                        }
                        gsum += fp * s;
                    }
            grad[idx] = coef * gsum;
        }
    });
    return energy;
}

namespace {

void apply_boundary(SphereMap& u, BoundaryCondition bc) {
    if (bc != BoundaryCondition::Hedgehog) return;
    const auto& d = u.domain();
    const Vec3 c = d.shape == DomainShape::Ball ? d.ball_center : Vec3(0.5 * (d.lo() + d.hi()));
    for (std::size_t i = 0; i < d.node_count(); ++i) {
        if (u.node_kind()[i] == NodeKind::Interior) continue;
        Vec3 y = d.node_position(i) - c;
        if (d.n_dim == 2) y[2] = 0.0;
        u.values()[i] = y.norm() > 0 ? Vec3(y / y.norm()) : Vec3::UnitZ();
    }
}

// tangential part of grad; returns (|P_T g|^2, |g|^2)
std::pair<double, double> tangent_direction(const SphereMap& u, const std::vector<Vec3>& g,
                                            std::vector<Vec3>& dir) {
    dir.resize(g.size());
    const auto& kind = u.node_kind();
    double tt = 0.0, gg = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (kind[i] != NodeKind::Interior) {
            dir[i].setZero();
            continue;
        }
        const Vec3& ui = u.value(i);
        dir[i] = g[i] - ui * ui.dot(g[i]);
        tt += dir[i].squaredNorm();
        gg += g[i].squaredNorm();
    }
    return {tt, gg};
}

void step(const SphereMap& u, const std::vector<Vec3>& dir, double tau, SphereMap& out) {
    const auto& kind = u.node_kind();
    auto& v = out.values();
    for (std::size_t i = 0; i < dir.size(); ++i) {
        if (kind[i] != NodeKind::Interior) {
            v[i] = u.value(i);
            continue;
        }
        Vec3 w = u.value(i) - tau * dir[i];
        const double n = w.norm();
        v[i] = w / n;
    }
}

}  // namespace

SolveReport minimize(const SphereMap& u0, const IntegrandModel& model, const SolveConfig& cfg) {
    if (cfg.max_iters < 0 || !(cfg.step0 > 0.0) || !(cfg.backtrack_factor > 0.0 && cfg.backtrack_factor < 1.0))
        throw DomainError("invalid solver configuration");
    if (model.n_dim() != u0.domain().n_dim || model.q_dim() != u0.q_dim())
        throw DomainError("model dimensions do not match the map");
    SolveReport rep;
    SphereMap u = u0;
    apply_boundary(u, cfg.boundary);
    SphereMap trial = u;
    std::vector<Vec3> g, dir, g_prev, dir_prev;
    double E = discrete_energy_gradient(u, model, g);
    if (!std::isfinite(E)) throw NumericError("initial energy is not finite");
    rep.energy_history.push_back(E);
    auto [tt, gg] = tangent_direction(u, g, dir);
    const double h = u.domain().spacing;
    const double tau_scale = std::pow(h, 2 - u.domain().n_dim);
    const double tau_min = 1e-14 * tau_scale;
    double tau = cfg.step0;
    std::vector<Vec3> prev_vals;
    const double tiny = 1e-13;
    auto small_gradient = [&](double t2, double g2) {
        return t2 <= tiny * tiny * std::max(g2, 1e-300) || t2 == 0.0;
    };
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        if (small_gradient(tt, gg)) {
            rep.converged = true;
            break;
        }
        double E_new = E;
        double t = tau;
        while (true) {
            step(u, dir, t, trial);
            E_new = discrete_energy(trial, model);
            if (!std::isfinite(E_new)) throw NumericError("energy became non-finite");
            if (E_new < E) break;
            t *= cfg.backtrack_factor;
            if (t < tau_min) break;
        }
        if (!(E_new < E)) {
            // no decrease at the smallest step: converged to roundoff or stalled
            if (tt <= 1e-16 * std::max(gg, 1e-300) * 1e6) {
                rep.converged = true;
                break;
            }
            throw StallError("projected descent stalled: no energy decrease at the minimal step");
        }
        prev_vals = u.values();
        g_prev = g;
        dir_prev = dir;
        std::swap(u, trial);
        E = discrete_energy_gradient(u, model, g);
        rep.energy_history.push_back(E);
        std::tie(tt, gg) = tangent_direction(u, g, dir);
        // Barzilai-Borwein trial step for the next iteration
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < dir.size(); ++i) {
            const Vec3 s = u.value(i) - prev_vals[i];
            ss += s.squaredNorm();
            sy += s.dot(dir[i] - dir_prev[i]);
        }
        tau = (sy > 0.0) ? ss / sy : 2.0 * t;
        tau = std::clamp(tau, tau_min * 1e3, 1e3 * tau_scale);
        const std::size_t nh = rep.energy_history.size();
        const int win = std::max(1, cfg.window);
        if (nh > std::size_t(win)) {
            const double Eold = rep.energy_history[nh - 1 - win];
            if ((Eold - E) <= cfg.energy_tol * win * std::abs(E)) {
                ++it;
                rep.converged = true;
                break;
            }
        }
    }
    rep.iterations = it;
    rep.final_gradient_ratio = gg > 0 ? std::sqrt(tt / gg) : 0.0;
    rep.map = std::move(u);
    return rep;
}

namespace {

double bump1(double t) { return std::abs(t) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0; }
double bump1d(double t) {
    if (std::abs(t) >= 1.0) return 0.0;
    const double s = 1.0 - t * t;
    return bump1(t) * (-2.0 * t / (s * s));
}

struct Bump {
    Vec3 c;
    double rho;
    int n;
    double value(const Vec3& x) const {
        double v = 1.0;
        for (int a = 0; a < n; ++a) v *= bump1((x[a] - c[a]) / rho);
        return v;
    }
    Vec3 grad(const Vec3& x) const {
        Vec3 g = Vec3::Zero();
        double f[3], df[3];
        for (int a = 0; a < n; ++a) {
            f[a] = bump1((x[a] - c[a]) / rho);
            df[a] = bump1d((x[a] - c[a]) / rho) / rho;
        }
        for (int a = 0; a < n; ++a) {
            double v = df[a];
            for (int b = 0; b < n; ++b)
                if (b != a) v *= f[b];
            g[a] = v;
        }
        return g;
    }
    bool inside(const Vec3& x) const {
        for (int a = 0; a < n; ++a)
            if (std::abs(x[a] - c[a]) >= rho) return false;
        return true;
    }
};

Bump random_bump(const GridDomain& d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const Vec3 lo = d.lo(), hi = d.hi();
    double half = 0.5 * (hi[0] - lo[0]);
    for (int a = 1; a < d.n_dim; ++a) half = std::min(half, 0.5 * (hi[a] - lo[a]));
    if (d.shape == DomainShape::Ball) half = std::min(half, d.radius);
    const double margin = 2.0 * d.spacing;
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Bump b;
        b.n = d.n_dim;
        b.rho = half * (0.35 + 0.15 * U(rng));
        b.c = Vec3::Zero();
        for (int a = 0; a < d.n_dim; ++a) b.c[a] = lo[a] + (hi[a] - lo[a]) * U(rng);
        // support box must sit inside the domain
        if (d.distance_to_boundary(b.c) >= b.rho * std::sqrt(double(d.n_dim)) + margin) return b;
    }
    throw DomainError("domain too small for residual test fields");
}

// cell-averaged partial derivatives and normalized cell value
void cell_derivatives(const SphereMap& u, std::size_t cell, Vec3* du, Vec3& uc, double& uc_norm) {
    const auto& d = u.domain();
    std::size_t nodes[8];
    cell_corners(d, cell, nodes);
    const int m = corner_count(d.n_dim);
    const double w = d.n_dim == 3 ? 0.25 : 0.5;
    Vec3 avg = Vec3::Zero();
    for (int i = 0; i < m; ++i) avg += u.value(nodes[i]);
    avg /= m;
    for (int a = 0; a < d.n_dim; ++a) du[a].setZero();
    for (const Edge& e : cell_edges(d.n_dim)) du[e.axis] += u.value(nodes[e.b]) - u.value(nodes[e.a]);
    for (int a = 0; a < d.n_dim; ++a) du[a] *= w / d.spacing;
    uc_norm = avg.norm();
    uc = uc_norm > 0 ? Vec3(avg / uc_norm) : Vec3::Zero();
}

// T = F I - 2 F_p (grad u)^T grad u from the cell-averaged derivatives
Eigen::Matrix3d stress(const SphereMap& u, const IntegrandModel& model, std::size_t cell) {
    const int n = u.domain().n_dim;
    Vec3 du[3], uc;
    double un;
    cell_derivatives(u, cell, du, uc, un);
    Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = du[i].dot(du[j]);
    const IntegrandValues v = model.values(G.trace());
    Eigen::Matrix3d T = -2.0 * v.Fp * G;
    for (int i = 0; i < n; ++i) T(i, i) += v.F;
    return T;
}

bool singular_cell(const SphereMap& u, std::size_t cell) {
    std::size_t nodes[8];
    Vec3 pts[8];
    cell_corners(u.domain(), cell, nodes);
    const int m = corner_count(u.domain().n_dim);
    for (int i = 0; i < m; ++i) pts[i] = u.value(nodes[i]);
    return hull_contains_origin(pts, m);
}

template <class Visit>
void for_cells_in_box(const SphereMap& u, const Vec3& c, double rho, Visit visit) {
    const auto& d = u.domain();
    const auto cd = d.cell_dims();
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int a = 0; a < 3; ++a) {
        if (a >= d.n_dim) {
            lo[a] = 0;
            hi[a] = 0;
            continue;
        }
        lo[a] = std::max(0, int(std::floor((c[a] - rho - d.origin[a]) / d.spacing)) - 1);
        hi[a] = std::min(cd[a] - 1, int(std::ceil((c[a] + rho - d.origin[a]) / d.spacing)) + 1);
    }
    const auto& mask = u.cell_mask();
    for (int i = lo[0]; i <= hi[0]; ++i)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int k = lo[2]; k <= hi[2]; ++k) {
                const std::size_t cell = d.cell_index(i, j, k);
                if (!mask[cell]) continue;
                visit(cell, d.cell_center(i, j, k));
            }
}

ResidualReport summarize(std::vector<double> v) {
    ResidualReport r;
    r.per_trial = std::move(v);
    for (double x : r.per_trial) {
        r.max = std::max(r.max, x);
        r.mean += x;
    }
    if (!r.per_trial.empty()) r.mean /= r.per_trial.size();
    return r;
}

}  // namespace

ResidualReport el_residual_report(const SphereMap& u, const IntegrandModel& model, int trials,
                                  std::uint64_t seed) {
    const auto& d = u.domain();
    const int n = d.n_dim;
    const double vol = d.cell_volume();
    const auto& mask = u.cell_mask();
    const double lam2 = vol * parallel_sum(d.cell_count(), [&](std::size_t cell) {
        if (!mask[cell]) return 0.0;
        Vec3 du[3], uc;
        double un;
        cell_derivatives(u, cell, du, uc, un);
        double g = 0.0;
        for (int k = 0; k < n; ++k) g += du[k].squaredNorm();
        return model.values(g).Fp * g;
    });
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N01;
    std::vector<double> out;
    for (int t = 0; t < trials; ++t) {
        const Bump b = random_bump(d, rng);
        Vec3 a = Vec3::Zero();
        for (int c = 0; c < u.q_dim(); ++c) a[c] = N01(rng);
        double num = 0.0, zeta2 = 0.0;
        for_cells_in_box(u, b.c, b.rho, [&](std::size_t cell, const Vec3& x) {
            if (!b.inside(x)) return;
            Vec3 du[3], uc;
            double un;
            cell_derivatives(u, cell, du, uc, un);
            // zeta = phi P_u a is undefined where the corner values surround the origin
            if (un < 1e-12 || singular_cell(u, cell)) return;
            double g = 0.0;
            for (int k = 0; k < n; ++k) g += du[k].squaredNorm();
            const double fp = model.values(g).Fp;
            const double phi = b.value(x);
            const Vec3 dphi = b.grad(x);
            const Vec3 Pa = a - uc * uc.dot(a);
            const Vec3 zeta = phi * Pa;
            double inner = 0.0, dz2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const Vec3 dzeta = dphi[k] * Pa - phi * (uc * a.dot(du[k]) + du[k] * a.dot(uc));
                inner += du[k].dot(dzeta);
                dz2 += dzeta.squaredNorm();
            }
            // A(u)(grad u, grad u) = -|grad u|^2 u; the term F_p |grad u|^2 <u, zeta>
            // vanishes for zeta tangent at the cell value but is kept for clarity
            num += (fp * inner + fp * g * uc.dot(zeta)) * vol;
            zeta2 += (zeta.squaredNorm() + dz2) * vol;
        });
        const double den = std::sqrt(zeta2) * std::sqrt(lam2);
        out.push_back(den > 0.0 ? std::abs(num) / den : 0.0);
    }
    return summarize(std::move(out));
}

ResidualReport stationarity_residual_report(const SphereMap& u, const IntegrandModel& model,
                                            int trials, std::uint64_t seed) {
    const auto& d = u.domain();
    const int n = d.n_dim;
    const double vol = d.cell_volume();
    const auto& mask = u.cell_mask();
    const double tnorm = vol * parallel_sum(d.cell_count(), [&](std::size_t cell) {
        if (!mask[cell]) return 0.0;
        return stress(u, model, cell).norm();
    });
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> N01;
    std::vector<double> out;
    for (int t = 0; t < trials; ++t) {
        const Bump b = random_bump(d, rng);
        Vec3 a = Vec3::Zero();
        for (int c = 0; c < n; ++c) a[c] = N01(rng);
        a /= a.norm();
        double num = 0.0, gradx_max = 0.0;
        for_cells_in_box(u, b.c, b.rho, [&](std::size_t cell, const Vec3& x) {
            if (!b.inside(x)) return;
            const Eigen::Matrix3d T = stress(u, model, cell);
            const Vec3 dphi = b.grad(x);
            // d_i X^j = d_i phi a_j
            const Eigen::Matrix3d DX = dphi * a.transpose();
            double contr = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) contr += T(i, j) * DX(i, j);
            num += contr * vol;
            gradx_max = std::max(gradx_max, DX.norm());
        });
        const double den = tnorm * gradx_max;
        out.push_back(den > 0.0 ? std::abs(num) / den : 0.0);
    }
    return summarize(std::move(out));
}

double el_residual(const SphereMap& u, const IntegrandModel& model, int trials, std::uint64_t seed) {
    return el_residual_report(u, model, trials, seed).max;
}

double stationarity_residual(const SphereMap& u, const IntegrandModel& model, int trials,
                             std::uint64_t seed) {
    return stationarity_residual_report(u, model, trials, seed).max;
}

}  // namespace fharm
