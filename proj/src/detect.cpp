#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "fharm/error.hpp"
#include "fharm/parallel.hpp"
#include "fharm/quadrature.hpp"
#include "fharm/strata.hpp"

namespace fharm {

double default_eps0(const IntegrandModel& model, double r0) {
    if (!(r0 > 0.0)) throw DomainError("r0 must be positive");
    if (model.n_dim() == 2) return 0.1 * 4.0 * M_PI;
    // hedgehog: |grad u|^2 = 2 / rho^2, theta(0, r) = (4 pi / r) int_0^r F(2 / rho^2) rho^2 d rho
    auto f = [&](double rho) { return model.values(2.0 / (rho * rho)).F * rho * rho; };
    const double th = 4.0 * M_PI / r0 * integrate(f, 0.0, r0, 1e-14, 1e-12).value;
    return 0.1 * theta_bar_from(model, th, r0, correction_h(model, r0));
}

namespace {

struct StencilEntry {
    int di, dj, dk;
    double weight;
};

// Cell weights of B_{r}(cell centre); same full/partial rule as DensityAnalyzer::theta.
std::vector<StencilEntry> ball_stencil(int n, double h, double r) {
    const double delta = 0.5 * std::sqrt(double(n)) * h;
    const int m = int(std::ceil(r / h)) + 1;
    static const double sub[4] = {-0.375, -0.125, 0.125, 0.375};
    std::vector<StencilEntry> out;
    const int mk = n == 3 ? m : 0;
    for (int i = -m; i <= m; ++i)
        for (int j = -m; j <= m; ++j)
            for (int k = -mk; k <= mk; ++k) {
                const Vec3 c = h * Vec3(i, j, k);
                const double dist = c.norm();
                if (dist - delta >= r) continue;
                double w = 1.0;
                if (dist + delta > r) {
                    int inside = 0;
                    const int sz = n == 3 ? 4 : 1;
                    for (int a = 0; a < 4; ++a)
                        for (int b = 0; b < 4; ++b)
                            for (int e = 0; e < sz; ++e) {
                                const Vec3 p = c + h * Vec3(sub[a], sub[b], n == 3 ? sub[e] : 0.0);
                                inside += p.squaredNorm() < r * r;
                            }
                    w = inside / (n == 3 ? 64.0 : 16.0);
                }
                if (w > 0.0) out.push_back({i, j, k, w});
            }
    return out;
}

struct CellRef {
    int i, j, k;
};

CellRef locate_cell(const GridDomain& d, const Vec3& x) {
    const auto cd = d.cell_dims();
    int idx[3] = {0, 0, 0};
    for (int a = 0; a < d.n_dim; ++a) {
        idx[a] = int(std::lround((x[a] - d.origin[a]) / d.spacing - 0.5));
        if (idx[a] < 0 || idx[a] >= cd[a]) throw DomainError("point outside the cell lattice");
    }
    const Vec3 c = d.cell_center(idx[0], idx[1], idx[2]);
    if ((c - x).head(d.n_dim).norm() > 1e-9 * d.spacing) throw DomainError("point is not a cell centre");
    return {idx[0], idx[1], idx[2]};
}

double stencil_sum(const DensityAnalyzer& an, const std::vector<StencilEntry>& st, const CellRef& c) {
    const GridDomain& d = an.map().domain();
    const auto cd = d.cell_dims();
    const auto& dens = an.field().density;
    const auto& mask = an.map().cell_mask();
    double s = 0.0;
    for (const auto& e : st) {
        const int a = c.i + e.di, b = c.j + e.dj, k = c.k + e.dk;
        if (a < 0 || b < 0 || k < 0 || a >= cd[0] || b >= cd[1] || k >= cd[2]) continue;
        const std::size_t idx = d.cell_index(a, b, k);
        if (mask[idx]) s += e.weight * dens[idx];
    }
    return s;
}

}  // namespace

std::vector<MonotoneProfile> cell_profiles(const DensityAnalyzer& an, const std::vector<Vec3>& centres,
                                           const std::vector<double>& radii) {
    const GridDomain& d = an.map().domain();
    const int n = d.n_dim;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (radii[i] < an.min_radius() * (1 - 1e-12)) throw ResolutionError("radius below 4 grid spacings");
        if (i && !(radii[i] > radii[i - 1])) throw DomainError("radii must be strictly increasing");
    }
    std::vector<CellRef> cells;
    for (const Vec3& x : centres) cells.push_back(locate_cell(d, x));
    std::vector<MonotoneProfile> out(centres.size());
    for (std::size_t m = 0; m < centres.size(); ++m) out[m].center = centres[m];
    const double vol = d.cell_volume();
    for (double r : radii) {
        const auto st = ball_stencil(n, d.spacing, r);
        const double h = correction_h(an.model(), r);
        std::vector<double> th(centres.size(), -1.0);
        parallel_blocks(centres.size(), 64, [&](std::size_t b, std::size_t e) {
            for (std::size_t m = b; m < e; ++m)
                if (d.contains_ball(centres[m], r)) th[m] = std::pow(r, 2 - n) * vol * stencil_sum(an, st, cells[m]);
        });
        for (std::size_t m = 0; m < centres.size(); ++m) {
            if (th[m] < 0.0) continue;
            auto& p = out[m];
            p.radii.push_back(r);
            p.theta.push_back(th[m]);
            p.h.push_back(h);
            p.theta_bar.push_back(theta_bar_from(an.model(), th[m], r, h));
            p.theta_smooth.push_back(std::numeric_limits<double>::quiet_NaN());
            p.flux.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return out;
}

DetectionResult singular_detect(const DensityAnalyzer& an, const ThresholdConfig& cfg,
                                const std::vector<double>& radii) {
    const SphereMap& u = an.map();
    const GridDomain& d = u.domain();
    const int n = d.n_dim;
    const double h = d.spacing;
    const double r0 = cfg.r0;
    if (r0 < an.min_radius() * (1 - 1e-12)) throw ResolutionError("r0 below 4 grid spacings");
    std::vector<double> rs;
    for (double r : radii)
        if (r >= r0 * (1 + 1e-12)) rs.push_back(r);
    for (std::size_t i = 1; i < rs.size(); ++i)
        if (!(rs[i] > rs[i - 1])) throw DomainError("radii must be strictly increasing");

    DetectionResult out;
    out.eps0 = cfg.eps0 ? *cfg.eps0 : default_eps0(an.model(), r0);

    const auto cd = d.cell_dims();
    const std::size_t ncell = d.cell_count();
    const auto st0 = ball_stencil(n, h, r0);
    const double h0 = correction_h(an.model(), r0);
    const double scale0 = std::pow(r0, 2 - n) * d.cell_volume();
    std::vector<double> tb0(ncell, -1.0);  // Theta_bar(c, r0), -1 for non-candidates
    parallel_blocks(ncell, 256, [&](std::size_t b, std::size_t e) {
        for (std::size_t cell = b; cell < e; ++cell) {
            const CellRef c{int(cell / (std::size_t(cd[1]) * cd[2])), int(cell / cd[2] % cd[1]), int(cell % cd[2])};
            if (!d.contains_ball(d.cell_center(c.i, c.j, c.k), r0)) continue;
            tb0[cell] = theta_bar_from(an.model(), scale0 * stencil_sum(an, st0, c), r0, h0);
        }
    });
    std::vector<std::size_t> cand;
    for (std::size_t cell = 0; cell < ncell; ++cell)
        if (tb0[cell] > out.eps0) cand.push_back(cell);
    // the remaining sampled radii, wherever the ball fits
    std::vector<std::uint8_t> ok(cand.size(), 1);
    for (double r : rs) {
        const auto st = ball_stencil(n, h, r);
        const double hr = correction_h(an.model(), r);
        const double scale = std::pow(r, 2 - n) * d.cell_volume();
        parallel_blocks(cand.size(), 64, [&](std::size_t b, std::size_t e) {
            for (std::size_t m = b; m < e; ++m) {
                if (!ok[m]) continue;
                const std::size_t cell = cand[m];
                const CellRef c{int(cell / (std::size_t(cd[1]) * cd[2])), int(cell / cd[2] % cd[1]), int(cell % cd[2])};
                if (!d.contains_ball(d.cell_center(c.i, c.j, c.k), r)) continue;
                ok[m] = theta_bar_from(an.model(), scale * stencil_sum(an, st, c), r, hr) > out.eps0;
            }
        });
    }
    std::vector<std::uint8_t> flag(ncell, 0);
    for (std::size_t m = 0; m < cand.size(); ++m) flag[cand[m]] = ok[m];

    // localization: flagged cells maximizing Theta_bar(., r0) within distance r0
    const int m = int(std::floor(r0 / h));
    const int mk = n == 3 ? m : 0;
    for (std::size_t cell = 0; cell < ncell; ++cell) {
        if (!flag[cell]) continue;
        const int i = int(cell / (std::size_t(cd[1]) * cd[2]));
        const int j = int(cell / cd[2] % cd[1]);
        const int k = int(cell % cd[2]);
        const Vec3 x = d.cell_center(i, j, k);
        out.flagged.push_back(x);
        out.flagged_theta_r0.push_back(tb0[cell]);
        bool is_max = true;
        for (int a = -m; a <= m && is_max; ++a)
            for (int bb = -m; bb <= m && is_max; ++bb)
                for (int c = -mk; c <= mk && is_max; ++c) {
                    if (a == 0 && bb == 0 && c == 0) continue;
                    if (h * h * (a * a + bb * bb + c * c) > r0 * r0) continue;
                    const int ii = i + a, jj = j + bb, kk = k + c;
                    if (ii < 0 || jj < 0 || kk < 0 || ii >= cd[0] || jj >= cd[1] || kk >= cd[2]) continue;
                    const std::size_t o = d.cell_index(ii, jj, kk);
                    if (flag[o] && tb0[o] > tb0[cell] * (1 + 1e-9)) is_max = false;
                }
        if (is_max) {
            out.singular.push_back(x);
            out.singular_theta_r0.push_back(tb0[cell]);
        }
    }
    return out;
}

double regularity_scale(const SphereMap& u, const Vec3& x, double alpha, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    const GridDomain& d = u.domain();
    const int n = d.n_dim;
    if (!d.point_in_shape(x)) throw DomainError("point outside the domain");
    const double cap = d.distance_to_boundary(x);
    const double h = d.spacing;
    // nodes within cap, sorted by distance to x
    std::vector<std::pair<double, std::size_t>> nodes;
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int a = 0; a < n; ++a) {
        lo[a] = std::max(0, int(std::floor((x[a] - cap - d.origin[a]) / h)));
        hi[a] = std::min(d.dims[a] - 1, int(std::ceil((x[a] + cap - d.origin[a]) / h)));
    }
    for (int i = lo[0]; i <= hi[0]; ++i)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int k = lo[2]; k <= hi[2]; ++k) {
                const std::size_t idx = d.node_index(i, j, k);
                const double dist = (d.node_position(idx) - x).head(n).norm();
                if (dist <= cap) nodes.emplace_back(dist, idx);
            }
    std::sort(nodes.begin(), nodes.end());
    std::unordered_map<std::size_t, std::size_t> rank;
    for (std::size_t i = 0; i < nodes.size(); ++i) rank[nodes[i].second] = i;

    auto seminorm = [&](double r) {
        const std::size_t m = std::upper_bound(nodes.begin(), nodes.end(), std::make_pair(r, std::size_t(-1))) - nodes.begin();
        if (m < 2) return 0.0;
        double best = 0.0;
        auto pair = [&](std::size_t a, std::size_t b) {
            const std::size_t p = nodes[a].second, q = nodes[b].second;
            const double dist = (d.node_position(p) - d.node_position(q)).head(n).norm();
            if (dist > 0.0) best = std::max(best, (u.value(p) - u.value(q)).norm() / std::pow(dist, alpha));
        };
        if (m * (m - 1) / 2 <= 4096) {
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = a + 1; b < m; ++b) pair(a, b);
            return best;
        }
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        std::uniform_int_distribution<int> axis(0, 2 * n - 1);
        for (int s = 0; s < 2048; ++s) {
            const std::size_t a = pick(rng), b = pick(rng);
            if (a != b) pair(a, b);
        }
        // nearest-neighbour edges
        for (int s = 0; s < 2048; ++s) {
            const std::size_t a = pick(rng);
            const int ax = axis(rng);
            const std::size_t p = nodes[a].second;
            int idx[3] = {int(p / (std::size_t(d.dims[1]) * d.dims[2])), int(p / d.dims[2] % d.dims[1]),
                          int(p % d.dims[2])};
            idx[ax / 2] += ax % 2 ? 1 : -1;
            if (idx[ax / 2] < 0 || idx[ax / 2] >= d.dims[ax / 2]) continue;
            const auto it = rank.find(d.node_index(idx[0], idx[1], idx[2]));
            if (it != rank.end() && it->second < m) pair(a, it->second);
        }
        return best;
    };
    auto scaled = [&](double r) { return std::pow(r, alpha) * seminorm(r); };
    if (scaled(cap) <= 1.0) return cap;
    double a = 0.0, b = cap;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (a + b);
        if (scaled(mid) <= 1.0)
            a = mid;
        else
            b = mid;
    }
    return a;
}

MinkowskiTable minkowski_content(const GridDomain& grid, const std::vector<Vec3>& S,
                                 const std::vector<double>& radii, int k, const Vec3& c, double R) {
    const int n = grid.n_dim;
    if (k < 0 || k > n) throw DomainError("dimension k out of range");
    MinkowskiTable out;
    out.radii = radii;
    const auto cd = grid.cell_dims();
    const double h = grid.spacing;
    for (double r : radii) {
        if (!(r > 0.0)) throw DomainError("radius must be positive");
        std::vector<std::uint8_t> mark(grid.cell_count(), 0);
        std::size_t count = 0;
        for (const Vec3& s : S) {
            int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
            for (int a = 0; a < n; ++a) {
                lo[a] = std::max(0, int(std::floor((s[a] - r - grid.origin[a]) / h)) - 1);
                hi[a] = std::min(cd[a] - 1, int(std::ceil((s[a] + r - grid.origin[a]) / h)) + 1);
            }
            for (int i = lo[0]; i <= hi[0]; ++i)
                for (int j = lo[1]; j <= hi[1]; ++j)
                    for (int kk = lo[2]; kk <= hi[2]; ++kk) {
                        const std::size_t idx = grid.cell_index(i, j, kk);
                        if (mark[idx]) continue;
                        const Vec3 p = grid.cell_center(i, j, kk);
                        if ((p - s).head(n).norm() > r || (p - c).head(n).norm() > R) continue;
                        mark[idx] = 1;
                        ++count;
                    }
        }
        const double vol = count * grid.cell_volume();
        out.volume.push_back(vol);
        out.normalized.push_back(vol / std::pow(r, n - k));
    }
    return out;
}

}  // namespace fharm
