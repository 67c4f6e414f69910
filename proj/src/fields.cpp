#include "fharm/fields.hpp"

#include <algorithm>
#include <cmath>

#include "fharm/error.hpp"
#include "fharm/parallel.hpp"
#include "fharm/quadrature.hpp"

namespace fharm {

int corner_count(int n_dim) { return n_dim == 3 ? 8 : 4; }

void cell_corners(const GridDomain& d, std::size_t cell, std::size_t* out) {
    const auto cd = d.cell_dims();
    const int k = int(cell % cd[2]);
    cell /= cd[2];
    const int j = int(cell % cd[1]);
    const int i = int(cell / cd[1]);
    const std::size_t base = d.node_index(i, j, k);
    const std::size_t sx = std::size_t(d.dims[1]) * d.dims[2], sy = d.dims[2];
    const int m = corner_count(d.n_dim);
    for (int c = 0; c < m; ++c) out[c] = base + (c & 1) * sx + ((c >> 1) & 1) * sy + ((c >> 2) & 1);
}

const std::vector<Edge>& cell_edges(int n_dim) {
    static const std::vector<Edge> e2 = {{0, 1, 0}, {2, 3, 0}, {0, 2, 1}, {1, 3, 1}};
    static const std::vector<Edge> e3 = {{0, 1, 0}, {2, 3, 0}, {4, 5, 0}, {6, 7, 0},
                                         {0, 2, 1}, {1, 3, 1}, {4, 6, 1}, {5, 7, 1},
                                         {0, 4, 2}, {1, 5, 2}, {2, 6, 2}, {3, 7, 2}};
    return n_dim == 3 ? e3 : e2;
}

namespace {

double cell_gradsq(const SphereMap& u, std::size_t cell) {
    const auto& d = u.domain();
    std::size_t nodes[8];
    cell_corners(d, cell, nodes);
    const double w = d.n_dim == 3 ? 0.25 : 0.5;
    double s = 0.0;
    for (const Edge& e : cell_edges(d.n_dim)) s += (u.value(nodes[e.b]) - u.value(nodes[e.a])).squaredNorm();
    return w * s / (d.spacing * d.spacing);
}

// same with each edge measured by the great-circle angle between its end values
double cell_gradsq_arc(const SphereMap& u, std::size_t cell) {
    const auto& d = u.domain();
    std::size_t nodes[8];
    cell_corners(d, cell, nodes);
    const double w = d.n_dim == 3 ? 0.25 : 0.5;
    double s = 0.0;
    for (const Edge& e : cell_edges(d.n_dim)) {
        const double chord = (u.value(nodes[e.b]) - u.value(nodes[e.a])).norm();
        const double arc = 2.0 * std::asin(std::min(1.0, 0.5 * chord));
        s += arc * arc;
    }
    return w * s / (d.spacing * d.spacing);
}

struct CoreEnergy {
    double energy = 0.0;
    double gradsq_integral = 0.0;
};

// zero of the trilinear interpolant of the corner values in local cell
// coordinates, by damped Newton from the centre and clamped to the cell
Vec3 core_apex(const Vec3* cv) {
    Vec3 s(0.5, 0.5, 0.5);
    for (int it = 0; it < 30; ++it) {
        Vec3 T = Vec3::Zero();
        Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
        for (int i = 0; i < 8; ++i) {
            double w[3], dw[3];
            for (int a = 0; a < 3; ++a) {
                const int bit = (i >> a) & 1;
                w[a] = bit ? s[a] : 1.0 - s[a];
                dw[a] = bit ? 1.0 : -1.0;
            }
            T += w[0] * w[1] * w[2] * cv[i];
            J.col(0) += dw[0] * w[1] * w[2] * cv[i];
            J.col(1) += w[0] * dw[1] * w[2] * cv[i];
            J.col(2) += w[0] * w[1] * dw[2] * cv[i];
        }
        if (T.norm() < 1e-12) break;
        const Eigen::FullPivLU<Eigen::Matrix3d> lu(J);
        if (!lu.isInvertible()) break;
        Vec3 step = lu.solve(T);
        const double len = step.norm();
        if (len > 0.25) step *= 0.25 / len;
        s = (s - step).cwiseMax(0.0).cwiseMin(1.0);
        if (len < 1e-12) break;
    }
    return s;
}

// energy of the 0-homogeneous extension of the bilinear face values about the
// apex of the cell (see core_apex)
CoreEnergy homogeneous_core(const SphereMap& u, const IntegrandModel& model, std::size_t cell) {
    constexpr int kFace = 12, kRad = 16;
    static double fx[kFace], fw[kFace], rx[kRad], rw[kRad];
    static const bool init = [] {
        gauss_legendre(kFace, fx, fw);
        gauss_legendre(kRad, rx, rw);
        for (int i = 0; i < kFace; ++i) {
            fx[i] = 0.5 * (fx[i] + 1.0);
            fw[i] *= 0.5;
        }
        for (int i = 0; i < kRad; ++i) {
            rx[i] = 0.5 * (rx[i] + 1.0);
            rw[i] *= 0.5;
        }
        return true;
    }();
    (void)init;
    const auto& d = u.domain();
    const double h = d.spacing;
    std::size_t nodes[8];
    cell_corners(d, cell, nodes);
    const bool dirichlet = model.kind() == IntegrandKind::Dirichlet;
    Vec3 corners[8];
    for (int i = 0; i < 8; ++i) corners[i] = u.value(nodes[i]);
    const Vec3 p = core_apex(corners);
    CoreEnergy out;
    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3, c = (a + 2) % 3;
        for (int side = 0; side < 2; ++side) {
            // cone over this face with apex p; height in units of h
            const double height = side - p[a];
            if (std::abs(height) < 1e-12) continue;
            Vec3 cv[2][2];
            for (int ib = 0; ib < 2; ++ib)
                for (int ic = 0; ic < 2; ++ic) {
                    const int corner = (side << a) | (ib << b) | (ic << c);
                    cv[ib][ic] = u.value(nodes[corner]);
                }
            for (int qs = 0; qs < kFace; ++qs)
                for (int qt = 0; qt < kFace; ++qt) {
                    const double s = fx[qs], t = fx[qt];
                    const Vec3 v = (1 - s) * (1 - t) * cv[0][0] + s * (1 - t) * cv[1][0] +
                                   (1 - s) * t * cv[0][1] + s * t * cv[1][1];
                    const Vec3 vs = (1 - t) * (cv[1][0] - cv[0][0]) + t * (cv[1][1] - cv[0][1]);
                    const Vec3 vt = (1 - s) * (cv[0][1] - cv[0][0]) + s * (cv[1][1] - cv[1][0]);
                    const double nv = v.norm();
                    if (nv < 1e-14) continue;
                    const Vec3 phi = v / nv;
                    const Vec3 db = (vs - phi * phi.dot(vs)) / (nv * h);
                    const Vec3 dc = (vt - phi * phi.dot(vt)) / (nv * h);
                    const Vec3 da = -(db * (s - p[b]) + dc * (t - p[c])) / height;
                    const double g = da.squaredNorm() + db.squaredNorm() + dc.squaredNorm();
                    const double wdA = fw[qs] * fw[qt] * h * h;
                    double radial;
                    if (dirichlet) {
                        radial = g;
                    } else {
                        radial = 0.0;
                        for (int k = 0; k < kRad; ++k) {
                            const double sg = rx[k];
                            radial += rw[k] * model.values(g / (sg * sg)).F * sg * sg;
                        }
                    }
                    out.energy += wdA * std::abs(height) * h * radial;
                    out.gradsq_integral += wdA * std::abs(height) * h * g;
                }
        }
    }
    return out;
}

}  // namespace

bool hull_contains_origin(const Vec3* pts, int count) {
    Vec3 x = pts[0];
    for (int it = 0; it < 1000; ++it) {
        int best = 0;
        double bd = x.dot(pts[0]);
        for (int i = 1; i < count; ++i) {
            const double v = x.dot(pts[i]);
            if (v < bd) {
                bd = v;
                best = i;
            }
        }
        if (bd > 0.0) return false;  // x separates the points from the origin
        const double xx = x.squaredNorm();
        if (xx < 1e-24) return true;
        const Vec3 dvec = pts[best] - x;
        const double dd = dvec.squaredNorm();
        if (dd == 0.0) return true;
        const double t = std::clamp(-x.dot(dvec) / dd, 0.0, 1.0);
        x += t * dvec;
    }
    return true;
}

std::vector<double> gradient_sq(const SphereMap& u) {
    std::vector<double> g(u.domain().cell_count());
    parallel_blocks(g.size(), 2048, [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) g[c] = cell_gradsq(u, c);
    });
    return g;
}

EnergyField energy_field(const SphereMap& u, const IntegrandModel& model, CoreTreatment core) {
    const auto& d = u.domain();
    EnergyField f;
    f.gradsq.resize(d.cell_count());
    parallel_blocks(f.gradsq.size(), 2048, [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) f.gradsq[c] = cell_gradsq_arc(u, c);
    });
    f.density.resize(f.gradsq.size());
    f.singular.assign(f.gradsq.size(), 0);
    const bool correct = core == CoreTreatment::HomogeneousExtension && d.n_dim == 3;
    const double vol = d.cell_volume();
    parallel_blocks(f.gradsq.size(), 2048, [&](std::size_t b, std::size_t e) {
        std::size_t nodes[8];
        Vec3 pts[8];
        for (std::size_t c = b; c < e; ++c) {
            if (correct && f.gradsq[c] * d.spacing * d.spacing > 0.05) {
                cell_corners(d, c, nodes);
                for (int i = 0; i < 8; ++i) pts[i] = u.value(nodes[i]);
                if (hull_contains_origin(pts, 8)) {
                    const CoreEnergy ce = homogeneous_core(u, model, c);
                    f.singular[c] = 1;
                    f.density[c] = ce.energy / vol;
                    f.gradsq[c] = ce.gradsq_integral / vol;
                    continue;
                }
            }
            f.density[c] = model.values(f.gradsq[c]).F;
        }
    });
    return f;
}

double total_energy(const SphereMap& u, const EnergyField& field) {
    const auto& mask = u.cell_mask();
    const double vol = u.domain().cell_volume();
    return vol * parallel_sum(field.density.size(), [&](std::size_t c) { return mask[c] ? field.density[c] : 0.0; });
}

double total_energy(const SphereMap& u, const IntegrandModel& model, CoreTreatment core) {
    return total_energy(u, energy_field(u, model, core));
}

SphereMap blowup(const SphereMap& u, const Vec3& x, double lambda, std::optional<double> spacing) {
    if (!(lambda > 0.0)) throw DomainError("blowup needs lambda > 0");
    const auto& src = u.domain();
    if (!src.contains_ball(x, lambda)) throw DomainError("blowup: image ball leaves the domain");
    const int n = src.n_dim;
    double hb = spacing.value_or(src.spacing / lambda);
    bool aligned = !spacing.has_value();
    if (hb > 2.0 / 9.0) {
        hb = 2.0 / 9.0;
        aligned = false;
    }
    GridDomain d;
    d.n_dim = n;
    d.spacing = hb;
    d.shape = DomainShape::Ball;
    d.radius = 1.0;
    d.ball_center = Vec3::Zero();
    d.dims = {1, 1, 1};
    d.origin = Vec3::Zero();
    for (int a = 0; a < n; ++a) {
        double y0 = -1.0;
        if (aligned) {
            const double base = (src.origin[a] - x[a]) / lambda;
            y0 = base + std::floor((-1.0 - base) / hb + 1e-9) * hb;
        }
        d.origin[a] = y0;
        d.dims[a] = int(std::ceil((1.0 - y0) / hb - 1e-9)) + 1;
    }
    d.validate();
    std::vector<Vec3> vals(d.node_count());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = u.sample(x + lambda * d.node_position(i));
    return SphereMap(d, u.q_dim(), std::move(vals));
}

Vec3 hedgehog_value(const Vec3& y) {
    const double r = y.norm();
    return r > 0.0 ? Vec3(y / r) : Vec3::UnitZ();
}

SphereMap hedgehog_map(const GridDomain& d, const Vec3& center) {
    if (d.n_dim == 2) {
        return SphereMap::from_function(d, 2, [&](const Vec3& y) {
            Vec3 v = y - center;
            v[2] = 0.0;
            return v.norm() > 0 ? Vec3(v / v.norm()) : Vec3::UnitX();
        });
    }
    return SphereMap::from_function(d, 3, [&](const Vec3& y) { return hedgehog_value(y - center); });
}

SphereMap cylinder_map(const GridDomain& d, const Vec3& point) {
    return SphereMap::from_function(d, 3, [&](const Vec3& y) {
        Vec3 v = y - point;
        v[2] = 0.0;
        const double r = v.norm();
        return r > 0.0 ? Vec3(v / r) : Vec3::UnitX();
    });
}

SphereMap circle_map(const GridDomain& d, double k) {
    if (d.n_dim != 2) throw DomainError("circle_map needs a 2-D grid");
    return SphereMap::from_function(d, 2, [&](const Vec3& y) { return Vec3(std::cos(k * y[0]), std::sin(k * y[0]), 0.0); });
}

SphereMap constant_map(const GridDomain& d, int q, const Vec3& value) {
    return SphereMap::from_function(d, q, [&](const Vec3&) { return value; });
}

SphereMap two_hedgehogs_map(const GridDomain& d, double a) {
    if (d.n_dim != 3) throw DomainError("two_hedgehogs_map needs a 3-D grid");
    const Vec3 p(-a, 0.0, 0.0);
    return SphereMap::from_function(d, 3, [&](const Vec3& y) {
        Vec3 m = y;
        if (m[0] > 0.0) m[0] = -m[0];
        return hedgehog_value(m - p);
    });
}

}  // namespace fharm
