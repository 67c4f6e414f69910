#include <algorithm>
#include <cmath>
#include <limits>

#include "fharm/error.hpp"
#include "fharm/parallel.hpp"
#include "fharm/strata.hpp"

namespace fharm {

namespace {

struct Active {
    Vec3 center;
    double radius;
    std::vector<std::size_t> claimed;  // points this ball is responsible for
};

}  // namespace

CoverResult covering_refine(int n_dim, const std::vector<Vec3>& points, const ThetaBarFn& theta_bar, double E,
                            const ThresholdConfig& cfg, int k, const Vec3& top_center, double top_radius) {
    if (!(cfg.rho > 0.0 && cfg.rho < 1.0)) throw DomainError("rho must lie in (0, 1)");
    if (!(cfg.r0 > 0.0 && top_radius > 0.0)) throw DomainError("radii must be positive");
    if (!(cfg.delta_pinch > 0.0)) throw DomainError("delta_pinch must be positive");
    if (k < 0 || k > n_dim) throw DomainError("dimension k out of range");
    CoverResult out;
    out.E = E;
    const auto dist = [&](const Vec3& a, const Vec3& b) { return (a - b).head(n_dim).norm(); };

    Active top{top_center, top_radius, {}};
    for (std::size_t i = 0; i < points.size(); ++i)
        if (dist(points[i], top_center) <= top_radius * (1 + 1e-12)) top.claimed.push_back(i);
    if (top.claimed.empty()) return out;

    const int max_stages =
        std::max(0, int(std::ceil(std::log(top_radius / cfg.r0) / std::log(1.0 / cfg.rho) - 1e-12))) + 2;
    const double level = E - cfg.delta_pinch;
    std::vector<Active> active{top};
    int stage = 0;
    while (!active.empty()) {
        if (stage > max_stages) throw InternalError("covering refinement did not terminate");
        // 0: r0-ball, 1: drop-ball, 2: refine
        std::vector<int> label(active.size());
        parallel_blocks(active.size(), 1, [&](std::size_t b, std::size_t e) {
            for (std::size_t a = b; a < e; ++a) {
                const Active& ball = active[a];
                if (ball.radius <= cfg.r0 * (1 + 1e-12)) {
                    label[a] = 0;
                    continue;
                }
                bool drop = true;
                for (std::size_t i = 0; i < points.size() && drop; ++i)
                    if (dist(points[i], ball.center) <= 2.0 * ball.radius &&
                        theta_bar(i, ball.radius / 10.0) > level)
                        drop = false;
                label[a] = drop ? 1 : 2;
            }
        });
        std::vector<Active> next;
        for (std::size_t a = 0; a < active.size(); ++a) {
            const Active& ball = active[a];
            if (label[a] < 2) {
                out.balls.push_back({ball.center, ball.radius, label[a] == 0 ? BallLabel::R0Ball : BallLabel::DropBall,
                                     stage});
                continue;
            }
            const double child = std::max(cfg.rho * ball.radius, cfg.r0);
            Refinement ref;
            ref.center = ball.center;
            ref.radius = ball.radius;
            ref.stage = stage;
            std::vector<Vec3> high;
            for (std::size_t i = 0; i < points.size(); ++i)
                if (dist(points[i], ball.center) <= 2.0 * ball.radius && theta_bar(i, child / 10.0) > level)
                    high.push_back(points[i]);
            ref.high_points = high.size();
            ref.spans = effective_span(n_dim, high, cfg.rho * ball.radius, k).spans;
            out.refinements.push_back(ref);
            // greedy net on the claimed points; each point goes to the first child covering it
            std::vector<Active> kids;
            for (std::size_t i : ball.claimed) {
                Active* home = nullptr;
                for (auto& c : kids)
                    if (dist(points[i], c.center) <= child) {
                        home = &c;
                        break;
                    }
                if (!home) {
                    kids.push_back({points[i], child, {}});
                    home = &kids.back();
                }
                home->claimed.push_back(i);
            }
            for (auto& c : kids) next.push_back(std::move(c));
        }
        active = std::move(next);
        ++stage;
    }
    out.stages = stage;
    for (const auto& b : out.balls) out.sum_rk += std::pow(b.radius, k);
    return out;
}

CoverResult covering_refine(int n_dim, const std::vector<Vec3>& points, const std::vector<MonotoneProfile>& profiles,
                            const ThresholdConfig& cfg, int k, const Vec3& top_center, double top_radius) {
    if (points.size() != profiles.size()) throw DomainError("one profile per point required");
    // Theta_bar is clamped to the sampled range: constant below the floor, last value above it
    auto tb = [&](std::size_t i, double s) {
        const auto& p = profiles[i];
        return p.theta_bar_at(std::min(s, p.radii.back()));
    };
    double E = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) E = std::max(E, tb(i, top_radius));
    return covering_refine(n_dim, points, tb, E, cfg, k, top_center, top_radius);
}

L2ApproxResult l2_approx_check(const SphereMap& u, const MeasureCloud& mu,
                               const std::vector<MonotoneProfile>& mu_profiles, const Vec3& x, double r, int k,
                               const ThresholdConfig& cfg, const SymmetryOptions& opt) {
    if (mu_profiles.size() != mu.points.size()) throw DomainError("one profile per atom required");
    const int n = mu.n_dim;
    const auto D = symmetry_defects(u, x, 8.0 * r, opt);
    L2ApproxResult out;
    // each side certified by the bound that makes it hardest to satisfy
    out.D0 = D[0].projected;
    out.Dk1 = D[std::min(k + 1, n)].ambient;
    out.applicable = out.D0 <= cfg.delta_pinch && out.Dk1 > cfg.eps_strat;
    const double b = jones_beta(mu, x, r, k);
    out.lhs = b * b;
    double s = 0.0;
    for (std::size_t i = 0; i < mu.points.size(); ++i)
        if ((mu.points[i] - x).head(n).norm() <= r * (1 + 1e-12)) s += mu.weights[i] * pinch(mu_profiles[i], r).value;
    out.rhs = s / std::pow(r, k);
    if (out.rhs > 0.0)
        out.ratio = out.lhs / out.rhs;
    else
        out.ratio = out.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return out;
}

}  // namespace fharm
