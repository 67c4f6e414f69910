#include <doctest.h>

#include <cmath>
#include <random>

#include "fharm/error.hpp"
#include "fharm/strata.hpp"
#include "oracles.hpp"

using namespace fharm;

namespace {

const IntegrandModel kDirichlet = IntegrandModel::dirichlet(3, 3, 5.5);

const GridDomain& ball48() {
    static const GridDomain d = GridDomain::ball(3, 48, 1.0);
    return d;
}

const SphereMap& hedgehog48() {
    static const SphereMap u = hedgehog_map(ball48());
    return u;
}

const SphereMap& cylinder48() {
    static const SphereMap u = cylinder_map(ball48());
    return u;
}

MeasureCloud cloud(const std::vector<Vec3>& pts, const std::vector<double>& w, int n = 3) {
    MeasureCloud mu;
    mu.n_dim = n;
    mu.points = pts;
    mu.weights = w;
    return mu;
}

}  // namespace

TEST_CASE("symmetry defects of the hedgehog") {
    const auto D = symmetry_defects(hedgehog48(), Vec3::Zero(), 0.9);
    REQUIRE(D.size() == 4);
    CHECK(D[0].ambient < 1e-3);
    CHECK(D[0].projected < 1e-3);
    // best 1-symmetric map: orbit means over half-planes, |mean| = pi / 4
    CHECK(std::abs(D[1].ambient - (1.0 - M_PI * M_PI / 16.0)) < 0.01);
    CHECK(std::abs(D[1].projected - 2.0 * (1.0 - M_PI / 4.0)) < 0.01);
    // best 2-symmetric map: means over half-balls, |mean| = 1/2
    CHECK(std::abs(D[2].ambient - 0.75) < 0.01);
    CHECK(std::abs(D[2].projected - 1.0) < 0.01);
    CHECK(std::abs(D[3].ambient - 1.0) < 0.01);
    CHECK(D[1].ambient > 10.0 * D[0].ambient);
    for (int k = 0; k < 3; ++k) {
        CHECK(D[k + 1].ambient >= D[k].ambient);
        CHECK(D[k + 1].projected >= D[k].projected);
        CHECK(D[k].projected >= D[k].ambient - 1e-12);
    }
}

TEST_CASE("symmetry defects of the cylinder") {
    const auto D = symmetry_defects(cylinder48(), Vec3(0.0, 0.0, 0.1), 0.8);
    CHECK(D[1].ambient < 1e-3);
    CHECK(std::abs(std::abs(D[1].direction.z()) - 1.0) < 1e-3);
    // half-balls split by a plane containing the axis: |mean| = 2 / pi
    CHECK(std::abs(D[2].ambient - (1.0 - 4.0 / (M_PI * M_PI))) < 0.01);
    CHECK(std::abs(D[2].projected - 2.0 * (1.0 - 2.0 / M_PI)) < 0.01);
    CHECK(symmetry_defect(cylinder48(), Vec3(0.0, 0.0, 0.1), 0.8, 1).ambient < 1e-3);
}

TEST_CASE("symmetry defect preconditions") {
    CHECK_THROWS_AS(symmetry_defects(hedgehog48(), Vec3(0.5, 0, 0), 0.6), DomainError);
    SymmetryOptions coarse;
    coarse.radial_samples = 4;
    CHECK_THROWS_AS(symmetry_defects(hedgehog48(), Vec3::Zero(), 0.5, coarse), ResolutionError);
}

TEST_CASE("defects are non-decreasing in k at random points") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-0.3, 0.3);
    const auto u = two_hedgehogs_map(ball48(), 0.3);
    for (int t = 0; t < 4; ++t) {
        const Vec3 x(U(rng), U(rng), U(rng));
        const auto D = symmetry_defects(u, x, 0.5);
        for (int k = 0; k < 3; ++k) {
            CHECK(D[k + 1].ambient >= D[k].ambient);
            CHECK(D[k + 1].projected >= D[k].projected);
        }
    }
}

TEST_CASE("strata membership") {
    SUBCASE("hedgehog origin lies in every stratum") {
        const auto rep = stratum_report(hedgehog48(), Vec3::Zero(), 0.8, 0.2);
        CHECK(rep.scales.size() == 3);
        CHECK(stratum_membership(rep, 0, 0.1, 0.2));
        // D^1 stays near 0.38 at all scales, so no ball is (1, eps)-symmetric
        CHECK(stratum_membership(rep, 0, 0.3, 0.2));
        CHECK(stratum_membership(rep, 2, 0.1, 0.2));
    }
    SUBCASE("constant map is in no stratum below n") {
        const auto u = constant_map(ball48(), 3, Vec3::UnitZ());
        const auto rep = stratum_report(u, Vec3(0.1, 0.0, 0.0), 0.6, 0.2);
        for (int k = 0; k < 3; ++k) CHECK_FALSE(stratum_membership(rep, k, 1e-6, 0.2));
    }
    SUBCASE("containment on random parameters") {
        const auto u = two_hedgehogs_map(ball48(), 0.3);
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        int violations = 0;
        for (const Vec3& x : {Vec3(-0.3, 0, 0), Vec3(0.1, 0.1, 0.0), Vec3(0.0, 0.0, 0.2)}) {
            const auto rep = stratum_report(u, x, 0.6, 0.15);
            for (int t = 0; t < 300; ++t) {
                const int k1 = int(3 * U(rng)), k2 = k1 + int((3 - k1) * U(rng));
                const double e2 = 0.02 + 0.5 * U(rng), e1 = e2 * (1.0 + U(rng));
                const double r2 = 0.15 + 0.45 * U(rng), r1 = 0.15 + (r2 - 0.15) * U(rng);
                if (stratum_membership(rep, k1, e1, r1) && !stratum_membership(rep, k2, e2, r2)) ++violations;
            }
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("singular set detection") {
    const DensityAnalyzer an(hedgehog48(), kDirichlet);
    ThresholdConfig cfg;
    cfg.r0 = 0.2;
    const auto radii = log_spaced(0.2, 0.6, 3);
    SUBCASE("hedgehog localizes at the origin") {
        const auto det = singular_detect(an, cfg, radii);
        CHECK(det.eps0 == doctest::Approx(0.1 * 8.0 * M_PI).epsilon(1e-9));
        CHECK(det.eps0 == doctest::Approx(default_eps0(kDirichlet, 0.2)));
        REQUIRE(det.singular.size() >= 1);
        for (const Vec3& s : det.singular) CHECK(s.norm() <= ball48().spacing);
        CHECK(det.flagged.size() >= det.singular.size());
    }
    SUBCASE("threshold above the supremum") {
        cfg.eps0 = 1e3;
        const auto det = singular_detect(an, cfg, radii);
        CHECK(det.flagged.empty());
        CHECK(det.singular.empty());
    }
    SUBCASE("constant map") {
        const auto u = constant_map(ball48(), 3, Vec3::UnitX());
        const DensityAnalyzer ac(u, kDirichlet);
        CHECK(singular_detect(ac, cfg, radii).flagged.empty());
    }
    SUBCASE("cell profiles agree with the analyzer") {
        const Vec3 c = ball48().cell_center(std::size_t(0));
        (void)c;
        const auto det = singular_detect(an, cfg, radii);
        const auto prof = cell_profiles(an, det.singular, radii);
        const auto ref = an.profile(det.singular[0], radii);
        REQUIRE(prof[0].radii.size() == ref.radii.size());
        for (std::size_t i = 0; i < ref.radii.size(); ++i)
            CHECK(std::abs(prof[0].theta_bar[i] - ref.theta_bar[i]) < 1e-10 * ref.theta_bar[i]);
    }
}

TEST_CASE("regularity scale") {
    SUBCASE("constant map reaches the boundary") {
        const auto u = constant_map(ball48(), 3, Vec3::UnitX());
        const Vec3 x(0.3, 0.0, 0.0);
        CHECK(regularity_scale(u, x, 0.5) == doctest::Approx(ball48().distance_to_boundary(x)));
    }
    SUBCASE("hedgehog origin is at grid scale") {
        CHECK(regularity_scale(hedgehog48(), Vec3::Zero(), 0.5) < 2.0 * ball48().spacing);
    }
    SUBCASE("hedgehog away from the origin") {
        const Vec3 x(0.5, 0.0, 0.0);
        const double alpha = 0.5;
        // analytic seminorm of y/|y| on B_r(x) by random pairs, then bisection
        std::mt19937_64 rng(21);
        std::normal_distribution<double> N;
        auto in_ball = [&](double r) {
            Vec3 v(N(rng), N(rng), N(rng));
            return Vec3(x + r * std::cbrt(std::uniform_real_distribution<double>(0, 1)(rng)) * v.normalized());
        };
        auto scaled = [&](double r) {
            double s = 0.0;
            for (int i = 0; i < 20000; ++i) {
                const Vec3 p = in_ball(r), q = in_ball(r);
                const double d = (p - q).norm();
                if (d > 0.0) s = std::max(s, (p.normalized() - q.normalized()).norm() / std::pow(d, alpha));
            }
            return std::pow(r, alpha) * s;
        };
        double lo = 0.0, hi = 0.5;
        for (int i = 0; i < 30; ++i) {
            const double mid = 0.5 * (lo + hi);
            (scaled(mid) <= 1.0 ? lo : hi) = mid;
        }
        const double r = regularity_scale(hedgehog48(), x, alpha);
        CHECK(r <= 2.0 * lo);
        CHECK(r >= 0.5 * lo);
    }
}

TEST_CASE("jones beta") {
    SUBCASE("plane-supported clouds") {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> U(-0.5, 0.5);
        const Vec3 a = Vec3(1, 2, -1).normalized(), b = a.cross(Vec3::UnitZ()).normalized();
        std::vector<Vec3> line, plane;
        for (int i = 0; i < 15; ++i) {
            line.push_back(Vec3(0.1, 0.0, 0.0) + U(rng) * a);
            plane.push_back(Vec3(0.1, 0.0, 0.0) + U(rng) * a + U(rng) * b);
        }
        const std::vector<double> w(15, 1.0);
        CHECK(jones_beta(cloud(line, w), Vec3::Zero(), 1.0, 1) <= 1e-12);
        CHECK(jones_beta(cloud(plane, w), Vec3::Zero(), 1.0, 2) <= 1e-12);
        CHECK(jones_beta(cloud({Vec3(0.2, 0.1, 0.0)}, {1.0}), Vec3::Zero(), 1.0, 0) == 0.0);
    }
    SUBCASE("two masses") {
        const double r = 0.8;
        const auto mu = cloud({Vec3(r / 2, 0, 0), Vec3(-r / 2, 0, 0)}, {1.0, 1.0});
        CHECK(jones_beta(mu, Vec3::Zero(), r, 0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    }
    SUBCASE("random clouds against brute force") {
        std::mt19937_64 rng(12);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (int t = 0; t < 6; ++t) {
            oracle::Cloud c;
            for (int i = 0; i < 20; ++i) {
                Vec3 p(U(rng), U(rng), U(rng));
                c.pts.push_back(0.5 * p);
                c.w.push_back(0.5 + 0.5 * U(rng));
            }
            const int k = t % 3;
            const double eig = jones_beta(cloud(c.pts, c.w), Vec3::Zero(), 1.0, k);
            const double bf = oracle::brute_beta(c, 1.0, k, 100 + t, 20000);
            CHECK(eig <= bf + 1e-12);
            CHECK(std::abs(eig - bf) < 1e-4);
        }
    }
    SUBCASE("invariance") {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> U(-0.4, 0.4);
        std::vector<Vec3> p;
        std::vector<double> w;
        for (int i = 0; i < 12; ++i) {
            p.emplace_back(U(rng), U(rng), U(rng));
            w.push_back(1.0 + U(rng));
        }
        const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Vec3(1, 1, 0).normalized()).toRotationMatrix();
        const Vec3 t(0.3, -0.2, 0.5);
        const double lam = 0.4;
        for (int k = 0; k < 3; ++k) {
            const double b0 = jones_beta(cloud(p, w), Vec3::Zero(), 1.0, k);
            std::vector<Vec3> q, s;
            std::vector<double> ws;
            for (std::size_t i = 0; i < p.size(); ++i) {
                q.push_back(R * p[i] + t);
                s.push_back(lam * p[i]);
                ws.push_back(w[i] * std::pow(lam, k));
            }
            CHECK(std::abs(jones_beta(cloud(q, w), t, 1.0, k) - b0) < 1e-10);
            CHECK(std::abs(jones_beta(cloud(s, ws), Vec3::Zero(), lam, k) - b0) < 1e-10);
        }
    }
}

TEST_CASE("effective span") {
    const double rho = 0.05;
    SUBCASE("well spread points span") {
        const auto s = effective_span(3, {Vec3::Zero(), Vec3(1, 0, 0), Vec3(0, 1, 0)}, rho, 2);
        CHECK(s.spans);
        REQUIRE(s.basis.size() == 2);
        for (const Vec3& b : s.basis) CHECK(std::abs(b.z()) < 1e-12);
    }
    SUBCASE("points in a thin tube do not span a plane") {
        std::vector<Vec3> pts;
        for (int i = 0; i < 10; ++i) pts.emplace_back(0.1 * i, 0.5 * rho * ((i % 3) - 1), 0.0);
        CHECK_FALSE(effective_span(3, pts, rho, 2).spans);
        CHECK(effective_span(3, pts, rho, 1).spans);
    }
    SUBCASE("margin at 2 rho") {
        // obtuse triangle whose largest height is d, attained at the far vertex
        for (auto [d, expect] : {std::pair{1.9 * rho, false}, std::pair{2.1 * rho, true}}) {
            const std::vector<Vec3> pts{Vec3::Zero(), Vec3(1, 0, 0), Vec3(2, d, 0)};
            CHECK(effective_span(2, pts, rho, 2).spans == expect);
        }
    }
}

TEST_CASE("reifenberg integral") {
    SUBCASE("flat and atomic measures") {
        std::vector<Vec3> p;
        for (int i = 0; i < 41; ++i) p.emplace_back(-0.2 + 0.01 * i, 0.0, 0.0);
        const auto mu = discrete_measure(2, p, std::vector<double>(p.size(), 0.005), 1);
        CHECK(reifenberg_integral(mu, Vec3::Zero(), 0.2, 1, 0.02, 0.5).value == 0.0);
        const auto one = discrete_measure(2, {Vec3(0.05, 0, 0)}, {0.01}, 1);
        CHECK(reifenberg_integral(one, Vec3::Zero(), 0.2, 1, 0.02, 0.5).value == 0.0);
    }
    SUBCASE("arc against a refined Riemann sum") {
        std::vector<Vec3> p;
        const double dphi = 0.004;
        for (int i = -150; i <= 150; ++i) p.emplace_back(std::sin(i * dphi), std::cos(i * dphi) - 1.0, 0.0);
        const auto mu = discrete_measure(2, p, std::vector<double>(p.size(), 0.5 * dphi), 1);
        const double r = 0.2, r_min = 0.02;
        const auto res = reifenberg_integral(mu, Vec3::Zero(), r, 1, r_min, 0.5);
        // midpoint rule in log s with 2000 non-dyadic steps
        const int steps = 2000;
        const double L = std::log(r / r_min);
        double oracle = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i].norm() > r) continue;
            double acc = 0.0;
            for (int j = 0; j < steps; ++j) {
                const double s = r_min * std::exp((j + 0.5) * L / steps);
                const double b = oracle::beta_line_2d(mu.points, mu.weights, p[i], s);
                acc += b * b * L / steps;
            }
            oracle += mu.weights[i] * acc;
        }
        CHECK(oracle > 0.0);
        CHECK(std::abs(res.value / oracle - 1.0) < 0.1);
        CHECK(res.ratio == doctest::Approx(res.value / r));
    }
}

TEST_CASE("covering refinement") {
    ThresholdConfig cfg;
    cfg.rho = 0.25;
    SUBCASE("single point gives one ball at every r0") {
        for (double r0 : {0.1, 0.05, 0.025}) {
            cfg.r0 = r0;
            const auto cov = covering_refine(3, {Vec3::Zero()}, [](std::size_t, double) { return 8.0 * M_PI; },
                                             8.0 * M_PI, cfg, 0, Vec3::Zero(), 1.0);
            CHECK(cov.balls.size() == 1);
            CHECK(cov.sum_rk == 1.0);
        }
    }
    SUBCASE("empty set") {
        const auto cov = covering_refine(3, {}, [](std::size_t, double) { return 0.0; }, 0.0, cfg, 1, Vec3::Zero(), 1.0);
        CHECK(cov.balls.empty());
        CHECK(cov.sum_rk == 0.0);
    }
    SUBCASE("segment stays within three lengths") {
        const double L = 1.0;
        std::vector<Vec3> pts;
        for (int i = 0; i <= 200; ++i) pts.emplace_back(0.0, 0.0, -0.5 + L * i / 200.0);
        auto pinched = [](std::size_t, double) { return 1.0; };
        for (double r0 : {0.1, 0.05, 0.025}) {
            cfg.r0 = r0;
            const auto cov = covering_refine(3, pts, pinched, 1.0, cfg, 1, Vec3::Zero(), 1.0);
            CHECK(cov.sum_rk <= 3.0 * L);
            // soundness: every point covered, every label from the two terminal kinds
            for (const Vec3& p : pts) {
                bool covered = false;
                for (const auto& b : cov.balls) covered = covered || (p - b.center).norm() <= b.radius * (1 + 1e-12);
                CHECK(covered);
            }
            for (const auto& b : cov.balls) CHECK(b.label == BallLabel::R0Ball);
        }
    }
    SUBCASE("uniform drop ends at the top ball") {
        cfg.r0 = 0.05;
        const auto cov = covering_refine(3, {Vec3::Zero(), Vec3(0.1, 0, 0)}, [](std::size_t, double s) { return s; },
                                         10.0, cfg, 0, Vec3::Zero(), 1.0);
        REQUIRE(cov.balls.size() == 1);
        CHECK(cov.balls[0].label == BallLabel::DropBall);
    }
}

TEST_CASE("minkowski content") {
    const auto& d = ball48();
    SUBCASE("single point") {
        const std::vector<double> radii{12 * d.spacing, 0.25, 0.4};
        const auto t = minkowski_content(d, {Vec3::Zero()}, radii, 0);
        for (std::size_t i = 0; i < radii.size(); ++i)
            CHECK(std::abs(t.volume[i] / (4.0 / 3.0 * M_PI * std::pow(radii[i], 3)) - 1.0) < 0.05);
        CHECK(t.normalized[1] == doctest::Approx(t.volume[1] / std::pow(0.25, 3)));
    }
    SUBCASE("axis segment") {
        const double L = 0.6;
        std::vector<Vec3> S;
        for (int i = 0; i <= 60; ++i) S.emplace_back(0.0, 0.0, -0.3 + L * i / 60.0);
        const std::vector<double> radii{0.2, 0.3, 0.4};
        const auto t = minkowski_content(d, S, radii, 1);
        for (std::size_t i = 0; i < radii.size(); ++i) {
            const double r = radii[i];
            CHECK(std::abs(t.volume[i] / (M_PI * r * r * L + 4.0 / 3.0 * M_PI * r * r * r) - 1.0) < 0.05);
        }
        for (std::size_t i = 1; i < radii.size(); ++i) CHECK(t.volume[i] >= t.volume[i - 1]);
    }
    SUBCASE("empty set") {
        const auto t = minkowski_content(d, {}, {0.1, 0.2}, 0);
        for (double v : t.volume) CHECK(v == 0.0);
    }
}

TEST_CASE("L2 approximation check") {
    // 72 nodes per axis: the smallest admissible r still has B_8r inside the unit ball
    const auto d = GridDomain::ball(3, 72, 1.0);
    const double r = 0.115;
    ThresholdConfig cfg;
    SUBCASE("hedgehog atom") {
        const auto u = hedgehog_map(d);
        const DensityAnalyzer an(u, kDirichlet);
        const auto mu = discrete_measure(3, {Vec3::Zero()}, {0.1}, 0);
        const auto prof = an.profile(Vec3::Zero(), {r, 2 * r, 4 * r, 8 * r});
        const auto res = l2_approx_check(u, mu, {prof}, Vec3::Zero(), r, 0, cfg);
        CHECK(res.lhs == 0.0);
        CHECK(res.rhs >= 0.0);
        CHECK(res.applicable);
    }
    SUBCASE("cylinder axis") {
        const auto u = cylinder_map(d);
        const DensityAnalyzer an(u, kDirichlet);
        std::vector<Vec3> pts;
        std::vector<MonotoneProfile> prof;
        for (int i = -2; i <= 2; ++i) {
            pts.emplace_back(0.0, 0.0, 0.03 * i);
            prof.push_back(an.profile(pts.back(), {r, 2 * r, 4 * r, 8 * r}));
        }
        const auto mu = discrete_measure(3, pts, std::vector<double>(pts.size(), 0.03), 1);
        const auto res = l2_approx_check(u, mu, prof, Vec3::Zero(), r, 1, cfg);
        CHECK(res.lhs <= 1e-24);
        CHECK(res.rhs >= 0.0);
        CHECK(res.D0 > 0.0);
    }
}

TEST_CASE("discrete measure weights") {
    const auto mu = discrete_measure(3, {Vec3::Zero(), Vec3::UnitX()}, {0.1, 0.2}, 2);
    CHECK(mu.weights[0] == doctest::Approx(M_PI * 0.01));
    CHECK(mu.weights[1] == doctest::Approx(M_PI * 0.04));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 / 3.0 * M_PI));
    CHECK_THROWS_AS(discrete_measure(3, {Vec3::Zero()}, {0.1, 0.2}, 0), DomainError);
}
