#include "fharm/grid.hpp"

#include <algorithm>
#include <cmath>

#include "fharm/error.hpp"

namespace fharm {

GridDomain GridDomain::centered_box(int n, int nodes, double half_width) {
    GridDomain d;
    d.n_dim = n;
    d.dims = {nodes, nodes, n == 3 ? nodes : 1};
    d.spacing = 2.0 * half_width / (nodes - 1);
    d.origin = Vec3(-half_width, -half_width, n == 3 ? -half_width : 0.0);
    d.shape = DomainShape::Box;
    d.validate();
    return d;
}

GridDomain GridDomain::ball(int n, int nodes, double radius) {
    GridDomain d = centered_box(n, nodes, radius);
    d.shape = DomainShape::Ball;
    d.radius = radius;
    d.ball_center = Vec3::Zero();
    d.validate();
    return d;
}

void GridDomain::validate() const {
    if (n_dim != 2 && n_dim != 3) throw DomainError("grid dimension must be 2 or 3");
    for (int a = 0; a < n_dim; ++a)
        if (dims[a] < 8) throw DomainError("grid needs at least 8 nodes per axis");
    if (n_dim == 2 && dims[2] != 1) throw DomainError("2-D grid must have one node along the third axis");
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("grid spacing must be positive");
    if (shape == DomainShape::Ball && !(radius > 0.0)) throw DomainError("ball radius must be positive");
}

std::array<int, 3> GridDomain::cell_dims() const {
    return {dims[0] - 1, dims[1] - 1, n_dim == 3 ? dims[2] - 1 : 1};
}

std::size_t GridDomain::cell_count() const {
    const auto c = cell_dims();
    return std::size_t(c[0]) * c[1] * c[2];
}

std::size_t GridDomain::cell_index(int i, int j, int k) const {
    const auto c = cell_dims();
    return (std::size_t(i) * c[1] + j) * c[2] + k;
}

Vec3 GridDomain::node_position(int i, int j, int k) const {
    return origin + spacing * Vec3(i, j, n_dim == 3 ? k : 0);
}

Vec3 GridDomain::node_position(std::size_t idx) const {
    const int k = int(idx % dims[2]);
    idx /= dims[2];
    const int j = int(idx % dims[1]);
    const int i = int(idx / dims[1]);
    return node_position(i, j, k);
}

Vec3 GridDomain::cell_center(int i, int j, int k) const {
    return origin + spacing * Vec3(i + 0.5, j + 0.5, n_dim == 3 ? k + 0.5 : 0.0);
}

Vec3 GridDomain::cell_center(std::size_t idx) const {
    const auto c = cell_dims();
    const int k = int(idx % c[2]);
    idx /= c[2];
    const int j = int(idx % c[1]);
    const int i = int(idx / c[1]);
    return cell_center(i, j, k);
}

Vec3 GridDomain::hi() const {
    return origin + spacing * Vec3(dims[0] - 1, dims[1] - 1, n_dim == 3 ? dims[2] - 1 : 0);
}

double GridDomain::cell_volume() const { return std::pow(spacing, n_dim); }

bool GridDomain::point_in_shape(const Vec3& x) const {
    const Vec3 l = lo(), h = hi();
    for (int a = 0; a < n_dim; ++a)
        if (x[a] < l[a] || x[a] > h[a]) return false;
    if (shape == DomainShape::Ball) return (x - ball_center).head(n_dim).norm() < radius;
    return true;
}

bool GridDomain::contains_ball(const Vec3& x, double r, double tol) const {
    return distance_to_boundary(x) >= r - tol;
}

double GridDomain::distance_to_boundary(const Vec3& x) const {
    const Vec3 l = lo(), h = hi();
    double d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_dim; ++a) d = std::min({d, x[a] - l[a], h[a] - x[a]});
    if (shape == DomainShape::Ball) d = std::min(d, radius - (x - ball_center).head(n_dim).norm());
    return d;
}

SphereMap::SphereMap(GridDomain domain, int q, std::vector<Vec3> values)
    : domain_(std::move(domain)), q_(q), values_(std::move(values)) {
    domain_.validate();
    if (q_ < 2 || q_ > 3) throw DomainError("target dimension q must be 2 or 3");
    if (values_.size() != domain_.node_count()) throw DomainError("value count does not match the grid");
    for (auto& v : values_) {
        if (q_ == 2) v[2] = 0.0;
        const double nrm = v.norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericError("map value is zero or not finite");
        // unit to rounding is left alone so that reloading a map is bitwise exact
        if (std::abs(nrm - 1.0) > 4e-16) v /= nrm;
    }
    build_topology();
}

SphereMap SphereMap::from_function(const GridDomain& domain, int q,
                                   const std::function<Vec3(const Vec3&)>& f) {
    domain.validate();
    std::vector<Vec3> vals(domain.node_count());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = f(domain.node_position(i));
    return SphereMap(domain, q, std::move(vals));
}

void SphereMap::build_topology() {
    const auto& d = domain_;
    const auto cd = d.cell_dims();
    cell_mask_.assign(d.cell_count(), 1);
    if (d.shape == DomainShape::Ball) {
        for (std::size_t c = 0; c < cell_mask_.size(); ++c)
            cell_mask_[c] = (d.cell_center(c) - d.ball_center).head(d.n_dim).norm() < d.radius;
    }
    // a node is interior when every cell around it is inside and it is not on the box faces
    std::vector<int> inside(d.node_count(), 0), total(d.node_count(), 0);
    const int kz = d.n_dim == 3 ? 2 : 1;
    for (int i = 0; i < cd[0]; ++i)
        for (int j = 0; j < cd[1]; ++j)
            for (int k = 0; k < cd[2]; ++k) {
                const bool in = cell_mask_[d.cell_index(i, j, k)];
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        for (int c = 0; c < kz; ++c) {
                            const std::size_t nidx = d.node_index(i + a, j + b, k + c);
                            total[nidx]++;
                            inside[nidx] += in;
                        }
            }
    const int full = d.n_dim == 3 ? 8 : 4;
    node_kind_.assign(d.node_count(), NodeKind::Outside);
    for (std::size_t nidx = 0; nidx < node_kind_.size(); ++nidx) {
        if (inside[nidx] == 0) continue;
        node_kind_[nidx] = (total[nidx] == full && inside[nidx] == full) ? NodeKind::Interior
                                                                        : NodeKind::Boundary;
    }
}

std::vector<bool> SphereMap::boundary_mask() const {
    std::vector<bool> m(node_kind_.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = node_kind_[i] != NodeKind::Interior;
    return m;
}

Vec3 SphereMap::sample(const Vec3& x) const {
    const auto& d = domain_;
    int i0[3] = {0, 0, 0};
    double t[3] = {0, 0, 0};
    for (int a = 0; a < d.n_dim; ++a) {
        double f = (x[a] - d.origin[a]) / d.spacing;
        f = std::clamp(f, 0.0, double(d.dims[a] - 1));
        int i = std::min(int(std::floor(f)), d.dims[a] - 2);
        i0[a] = i;
        t[a] = f - i;
    }
    Vec3 v = Vec3::Zero();
    const int kz = d.n_dim == 3 ? 2 : 1;
    double wmax = -1.0;
    Vec3 vmax = Vec3::UnitZ();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < kz; ++c) {
                double w = (a ? t[0] : 1 - t[0]) * (b ? t[1] : 1 - t[1]);
                if (d.n_dim == 3) w *= (c ? t[2] : 1 - t[2]);
                const Vec3& u = values_[d.node_index(i0[0] + a, i0[1] + b, i0[2] + c)];
                v += w * u;
                if (w > wmax) {
                    wmax = w;
                    vmax = u;
                }
            }
    const double nrm = v.norm();
    return nrm > 1e-300 ? Vec3(v / nrm) : vmax;
}

}  // namespace fharm
