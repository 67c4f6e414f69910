#include "fharm/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fharm/error.hpp"

namespace fharm {

double MonotoneProfile::theta_bar_at(double r) const {
    if (radii.empty()) throw RangeError("empty profile");
    const double span = radii.back();
    if (r > radii.back() * (1 + 1e-12) + 1e-15 * span) throw RangeError("radius above the sampled profile");
    if (r <= radii.front()) return theta_bar.front();
    const std::size_t k = std::upper_bound(radii.begin(), radii.end(), r) - radii.begin();
    if (k >= radii.size()) return theta_bar.back();
    const double t = (r - radii[k - 1]) / (radii[k] - radii[k - 1]);
    return (1 - t) * theta_bar[k - 1] + t * theta_bar[k];
}

DensityAnalyzer::DensityAnalyzer(const SphereMap& u, const IntegrandModel& model, CoreTreatment core)
    : u_(&u), model_(model), field_(energy_field(u, model, core)) {}

void DensityAnalyzer::check(const Vec3& x, double r) const {
    if (!(r > 0.0)) throw DomainError("radius must be positive");
    if (r < min_radius() * (1 - 1e-12)) throw ResolutionError("radius below 4 grid spacings");
    if (!u_->domain().contains_ball(x, r)) throw DomainError("ball leaves the domain");
}

double DensityAnalyzer::theta(const Vec3& x, double r) const {
    return theta(x, std::vector<double>{r}).front();
}

std::vector<double> DensityAnalyzer::theta(const Vec3& x, const std::vector<double>& radii) const {
    if (radii.empty()) return {};
    for (std::size_t i = 0; i < radii.size(); ++i) {
        check(x, radii[i]);
        if (i && !(radii[i] > radii[i - 1])) throw DomainError("radii must be strictly increasing");
    }
    const auto& d = u_->domain();
    const int n = d.n_dim;
    const double h = d.spacing;
    const double delta = 0.5 * std::sqrt(double(n)) * h;
    const double rmax = radii.back();
    const auto cd = d.cell_dims();
    const auto& mask = u_->cell_mask();
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int a = 0; a < n; ++a) {
        lo[a] = std::max(0, int(std::floor((x[a] - rmax - d.origin[a]) / h)) - 1);
        hi[a] = std::min(cd[a] - 1, int(std::ceil((x[a] + rmax - d.origin[a]) / h)) + 1);
    }
    const std::size_t m = radii.size();
    std::vector<double> full(m + 1, 0.0), part(m, 0.0);
    static const double sub[4] = {-0.375, -0.125, 0.125, 0.375};
    const int sz = n == 3 ? 4 : 1;
    const double nsub = n == 3 ? 64.0 : 16.0;
    for (int i = lo[0]; i <= hi[0]; ++i)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int k = lo[2]; k <= hi[2]; ++k) {
                const std::size_t cell = d.cell_index(i, j, k);
                if (!mask[cell]) continue;
                const Vec3 c = d.cell_center(i, j, k);
                const double dist = (c - x).head(n).norm();
                if (dist - delta >= rmax) continue;
                const double f = field_.density[cell];
                const std::size_t ifull = std::lower_bound(radii.begin(), radii.end(), dist + delta) - radii.begin();
                full[ifull] += f;
                std::size_t ip = std::upper_bound(radii.begin(), radii.end(), dist - delta) - radii.begin();
                for (; ip < ifull; ++ip) {
                    const double r2 = radii[ip] * radii[ip];
                    int inside = 0;
                    for (int a = 0; a < 4; ++a)
                        for (int b = 0; b < 4; ++b)
                            for (int e = 0; e < sz; ++e) {
                                const Vec3 p = c + h * Vec3(sub[a], sub[b], n == 3 ? sub[e] : 0.0) - x;
                                inside += p.head(n).squaredNorm() < r2;
                            }
                    part[ip] += f * inside / nsub;
                }
            }
    std::vector<double> out(m);
    double acc = 0.0;
    const double vol = d.cell_volume();
    for (std::size_t i = 0; i < m; ++i) {
        acc += full[i];
        out[i] = std::pow(radii[i], 2 - n) * vol * (acc + part[i]);
    }
    return out;
}

double DensityAnalyzer::flux(const Vec3& x, double r, int dirs, std::uint64_t seed) const {
    const auto& d = u_->domain();
    const int n = d.n_dim;
    const double dr = 0.5 * d.spacing;
    if (!d.contains_ball(x, r + dr)) throw DomainError("flux shell leaves the domain");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N01;
    const auto cd = d.cell_dims();
    double sum = 0.0;
    for (int s = 0; s < dirs; ++s) {
        Vec3 w = Vec3::Zero();
        for (int a = 0; a < n; ++a) w[a] = N01(rng);
        w /= w.norm();
        const Vec3 p = x + r * w;
        const Vec3 du = (u_->sample(p + dr * w) - u_->sample(p - dr * w)) / (2 * dr);
        int idx[3] = {0, 0, 0};
        for (int a = 0; a < n; ++a)
            idx[a] = std::clamp(int(std::floor((p[a] - d.origin[a]) / d.spacing)), 0, cd[a] - 1);
        const double g = field_.gradsq[d.cell_index(idx[0], idx[1], idx[2])];
        sum += model_.values(g).Fp * du.squaredNorm();
    }
    const double area = n == 3 ? 4.0 * M_PI : 2.0 * M_PI;
    return 2.0 * r * area * sum / dirs;
}

MonotoneProfile DensityAnalyzer::profile(const Vec3& x, const std::vector<double>& radii,
                                         const std::vector<double>* h_values, int flux_dirs,
                                         std::uint64_t seed) const {
    MonotoneProfile p;
    p.center = x;
    p.radii = radii;
    p.theta = theta(x, radii);
    p.h.resize(radii.size());
    p.theta_bar.resize(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) {
        p.h[i] = h_values ? (*h_values)[i] : correction_h(model_, radii[i]);
        p.theta_bar[i] = theta_bar_from(model_, p.theta[i], radii[i], p.h[i]);
    }
    p.flux.assign(radii.size(), std::numeric_limits<double>::quiet_NaN());
    if (flux_dirs > 0) {
        const double dr = 0.5 * map().domain().spacing;
        for (std::size_t i = 0; i < radii.size(); ++i)
            if (map().domain().contains_ball(x, radii[i] + dr)) p.flux[i] = flux(x, radii[i], flux_dirs, seed + i);
    }
    return p;
}

double theta(const SphereMap& u, const IntegrandModel& model, const Vec3& x, double r) {
    return DensityAnalyzer(u, model).theta(x, r);
}

double theta_bar_from(const IntegrandModel& model, double theta_value, double r, double h_value) {
    return std::exp(model.vartheta() * r / model.c_e()) * theta_value + h_value;
}

double theta_bar(const SphereMap& u, const IntegrandModel& model, const Vec3& x, double r) {
    const double h = correction_h(model, r);
    return theta_bar_from(model, theta(u, model, x, r), r, h);
}

namespace {

double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

constexpr int kMollifierPoints = 4000;

}  // namespace

double mollifier(double s, double eps) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    if (s < eps) return smooth_step(s / eps);
    if (s > 1.0 - eps) return smooth_step((1.0 - s) / eps);
    return 1.0;
}

double theta_smoothed_at(const MonotoneProfile& p, double r, double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw DomainError("mollifier eps must lie in (0, 1/2)");
    const auto inside = std::upper_bound(p.radii.begin(), p.radii.end(), r * (1 + 1e-12)) - p.radii.begin();
    if (inside < 16) throw ResolutionError("fewer than 16 radial samples inside the mollifier support");
    double acc = 0.0;
    for (int i = 0; i < kMollifierPoints; ++i) {
        const double s = (i + 0.5) / kMollifierPoints;
        const double w = mollifier(s, eps);
        if (w > 0.0) acc += w * p.theta_bar_at(std::min(r * s, p.radii.back()));
    }
    return acc / kMollifierPoints;
}

void theta_smoothed(MonotoneProfile& p, double eps) {
    p.theta_smooth.assign(p.radii.size(), std::numeric_limits<double>::quiet_NaN());
    double norm = 0.0;
    for (int i = 0; i < kMollifierPoints; ++i) norm += mollifier((i + 0.5) / kMollifierPoints, eps);
    p.smooth_norm = norm / kMollifierPoints;
    for (std::size_t i = 0; i < p.radii.size(); ++i) {
        if (i + 1 < 16) continue;
        p.theta_smooth[i] = theta_smoothed_at(p, p.radii[i], eps);
    }
}

PinchValue pinch(const MonotoneProfile& p, double r) {
    if (!(r > 0.0)) throw RangeError("pinch needs r > 0");
    if (p.radii.empty() || 8.0 * r > p.radii.back() * (1 + 1e-12)) throw RangeError("pinch: 8r above the sampled profile");
    PinchValue v;
    v.raw = p.theta_bar_at(8.0 * r) - p.theta_bar_at(r);
    v.value = std::max(0.0, v.raw);
    return v;
}

MonotonicityReport monotonicity_report(const DensityAnalyzer& an, const std::vector<Vec3>& centers,
                                       const std::vector<double>& radii, const MonotonicityOptions& opt) {
    MonotonicityReport rep;
    std::vector<double> hv(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) hv[i] = correction_h(an.model(), radii[i]);
    for (std::size_t c = 0; c < centers.size(); ++c) {
        MonotoneProfile p = an.profile(centers[c], radii, &hv, opt.flux_dirs, opt.seed + 7919 * c);
        if (radii.size() >= 16)
            theta_smoothed(p, opt.mollifier_eps);
        else
            p.theta_smooth.assign(radii.size(), std::numeric_limits<double>::quiet_NaN());
        for (double v : p.theta_bar) rep.Lambda = std::max(rep.Lambda, v);
        rep.profiles.push_back(std::move(p));
    }
    rep.tol = opt.tol_factor * rep.Lambda;
    for (std::size_t c = 0; c < rep.profiles.size(); ++c) {
        const auto& p = rep.profiles[c];
        for (std::size_t i = 0; i + 1 < p.radii.size(); ++i) {
            const double inc = p.theta_bar[i + 1] - p.theta_bar[i];
            rep.worst_increment = (c == 0 && i == 0) ? inc : std::min(rep.worst_increment, inc);
            if (inc < -rep.tol) rep.violations.push_back({c, i, inc});
            if (std::isfinite(p.flux[i]) && std::isfinite(p.flux[i + 1])) {
                const double need = 0.5 * (p.flux[i] + p.flux[i + 1]) * (p.radii[i + 1] - p.radii[i]);
                if (inc < need - rep.tol) rep.flux_deficits.push_back({c, i, inc - need});
            }
        }
    }
    return rep;
}

MonotonicityReport monotonicity_report(const SphereMap& u, const IntegrandModel& model,
                                       const std::vector<Vec3>& centers,
                                       const std::vector<double>& radii, const MonotonicityOptions& opt) {
    return monotonicity_report(DensityAnalyzer(u, model), centers, radii, opt);
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> r(count);
    for (int i = 0; i < count; ++i)
        r[i] = count == 1 ? lo : lo * std::pow(hi / lo, double(i) / (count - 1));
    return r;
}

}  // namespace fharm
