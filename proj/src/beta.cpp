#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "fharm/error.hpp"
#include "fharm/parallel.hpp"
#include "fharm/strata.hpp"

namespace fharm {

double unit_ball_volume(int k) {
    if (k < 0) throw DomainError("negative dimension");
    return std::pow(M_PI, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

MeasureCloud discrete_measure(int n_dim, const std::vector<Vec3>& points, const std::vector<double>& radii,
                              int k) {
    if (points.size() != radii.size()) throw DomainError("points and radii differ in length");
    MeasureCloud mu;
    mu.n_dim = n_dim;
    mu.points = points;
    const double wk = unit_ball_volume(k);
    for (double r : radii) {
        if (!(r >= 0.0)) throw DomainError("radius must be non-negative");
        mu.weights.push_back(wk * std::pow(r, k));
    }
    return mu;
}

namespace {

void check_cloud(const MeasureCloud& mu) {
    if (mu.n_dim != 2 && mu.n_dim != 3) throw DomainError("cloud dimension must be 2 or 3");
    if (mu.points.size() != mu.weights.size()) throw DomainError("points and weights differ in length");
    for (double w : mu.weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be finite and non-negative");
}

}  // namespace

BetaResult jones_beta_fit(const MeasureCloud& mu, const Vec3& x, double r, int k) {
    check_cloud(mu);
    const int n = mu.n_dim;
    if (k < 0 || k >= n) throw DomainError("beta needs 0 <= k < n");
    if (!(r > 0.0)) throw DomainError("radius must be positive");
    BetaResult out;
    out.center = x;
    double W = 0.0;
    Vec3 c = Vec3::Zero();
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < mu.points.size(); ++i) {
        if ((mu.points[i] - x).head(n).norm() > r * (1 + 1e-12) || mu.weights[i] == 0.0) continue;
        in.push_back(i);
        W += mu.weights[i];
        c += mu.weights[i] * mu.points[i];
    }
    if (W == 0.0) return out;
    c /= W;
    out.center = c;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i : in) {
        const Eigen::VectorXd d = (mu.points[i] - c).head(n);
        M += mu.weights[i] * d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    // ascending eigenvalues; the plane takes the top k eigenvectors
    Eigen::MatrixXd top = es.eigenvectors().rightCols(k);
    for (int j = k - 1; j >= 0; --j) {
        Vec3 v = Vec3::Zero();
        v.head(n) = top.col(j);
        out.basis.push_back(v);
    }
    // residual measured directly, exact zero for clouds on the plane
    double resid = 0.0;
    for (std::size_t i : in) {
        Eigen::VectorXd d = (mu.points[i] - c).head(n);
        if (k > 0) d -= top * (top.transpose() * d);
        resid += mu.weights[i] * d.squaredNorm();
    }
    out.beta = std::sqrt(std::max(0.0, resid) * std::pow(r, -2.0 - k));
    return out;
}

double jones_beta(const MeasureCloud& mu, const Vec3& x, double r, int k) {
    return jones_beta_fit(mu, x, r, k).beta;
}

namespace {

double distance_to_span(const Vec3& p, const Vec3& origin, const std::vector<Vec3>& basis, int n) {
    Vec3 d = p - origin;
    for (const Vec3& b : basis) d -= d.dot(b) * b;
    return d.head(n).norm();
}

}  // namespace

EffectiveSpan effective_span(int n_dim, const std::vector<Vec3>& points, double rho, int k) {
    if (!(rho > 0.0)) throw DomainError("rho must be positive");
    if (k < 0 || k > n_dim) throw DomainError("span dimension out of range");
    EffectiveSpan best;
    if (points.empty()) return best;
    std::size_t best_count = 0;
    for (std::size_t s = 0; s < points.size(); ++s) {
        EffectiveSpan cur;
        cur.origin = points[s];
        cur.picks.push_back(s);
        while (int(cur.picks.size()) < k + 1) {
            double far = -1.0;
            std::size_t arg = 0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                const double d = distance_to_span(points[i], cur.origin, cur.basis, n_dim);
                if (d > far) {
                    far = d;
                    arg = i;
                }
            }
            if (!(far > 2.0 * rho)) break;
            Vec3 v = points[arg] - cur.origin;
            for (const Vec3& b : cur.basis) v -= v.dot(b) * b;
            cur.basis.push_back(v.normalized());
            cur.picks.push_back(arg);
        }
        if (int(cur.picks.size()) == k + 1) {
            cur.spans = true;
            return cur;
        }
        if (cur.picks.size() > best_count) {
            best_count = cur.picks.size();
            best = cur;
        }
    }
    return best;
}

ReifenbergResult reifenberg_integral(const MeasureCloud& mu, const Vec3& x, double r, int k, double r_min,
                                     double delta) {
    check_cloud(mu);
    if (!(r > 0.0 && r_min > 0.0 && r_min <= r)) throw DomainError("need 0 < r_min <= r");
    const int n = mu.n_dim;
    // octaves of equal log-width between r_min and r, Simpson's rule on each
    const int octaves = std::max(1, int(std::ceil(std::log2(r / r_min) - 1e-12)));
    const double width = std::log(r / r_min) / octaves;
    std::vector<double> scales, weights;
    for (int j = 0; j <= 2 * octaves; ++j) {
        scales.push_back(r * std::exp(-0.5 * width * j));
        const double w = (j == 0 || j == 2 * octaves) ? 1.0 : (j % 2 ? 4.0 : 2.0);
        weights.push_back(w * width / 6.0);
    }
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < mu.points.size(); ++i)
        if ((mu.points[i] - x).head(n).norm() <= r * (1 + 1e-12) && mu.weights[i] > 0.0) in.push_back(i);
    const double value = parallel_sum(
        in.size(),
        [&](std::size_t m) {
            const std::size_t i = in[m];
            double acc = 0.0;
            for (std::size_t j = 0; j < scales.size(); ++j) {
                const double b = jones_beta(mu, mu.points[i], scales[j], k);
                acc += weights[j] * b * b;
            }
            return mu.weights[i] * acc;
        },
        16);
    ReifenbergResult out;
    out.value = value;
    out.ratio = value / std::pow(r, k);
    out.passes = out.ratio <= delta;
    return out;
}

}  // namespace fharm
