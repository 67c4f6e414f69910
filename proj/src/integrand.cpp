#include "fharm/integrand.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fharm/error.hpp"
#include "fharm/quadrature.hpp"

namespace fharm {

MonotoneCubic::MonotoneCubic(std::vector<double> p, std::vector<double> F)
    : p_(std::move(p)), F_(std::move(F)) {
    const std::size_t N = p_.size();
    if (N < 2 || F_.size() != N) throw DomainError("tabulated integrand needs >= 2 matching samples");
    for (std::size_t i = 1; i < N; ++i)
        if (!(p_[i] > p_[i - 1])) throw DomainError("tabulated p samples must be strictly increasing");
    std::vector<double> d(N - 1);
    for (std::size_t i = 0; i + 1 < N; ++i) d[i] = (F_[i + 1] - F_[i]) / (p_[i + 1] - p_[i]);
    m_.assign(N, 0.0);
    m_[0] = d[0];
    m_[N - 1] = d[N - 2];
    for (std::size_t i = 1; i + 1 < N; ++i)
        m_[i] = (d[i - 1] * d[i] > 0.0) ? 0.5 * (d[i - 1] + d[i]) : 0.0;
    for (std::size_t i = 0; i + 1 < N; ++i) {
        if (d[i] == 0.0) {
            m_[i] = m_[i + 1] = 0.0;
            continue;
        }
        const double a = m_[i] / d[i];
        const double b = m_[i + 1] / d[i];
        const double s = a * a + b * b;
        if (s > 9.0) {
            const double tau = 3.0 / std::sqrt(s);
            m_[i] = tau * a * d[i];
            m_[i + 1] = tau * b * d[i];
        }
    }
}

IntegrandValues MonotoneCubic::eval(double p) const {
    const double span = p_.back() - p_.front();
    const double slack = 1e-12 * std::max(1.0, span);
    if (p < p_.front() - slack || p > p_.back() + slack) {
        std::ostringstream os;
        os << "tabulated integrand queried at p=" << p << " outside [" << p_.front() << ", "
           << p_.back() << "]";
        throw ExtrapolationError(os.str());
    }
    p = std::clamp(p, p_.front(), p_.back());
    std::size_t k = std::upper_bound(p_.begin(), p_.end(), p) - p_.begin();
    k = std::clamp<std::size_t>(k, 1, p_.size() - 1) - 1;
    const double H = p_[k + 1] - p_[k];
    const double t = (p - p_[k]) / H;
    const double t2 = t * t, t3 = t2 * t;
    const double f0 = F_[k], f1 = F_[k + 1], m0 = m_[k] * H, m1 = m_[k + 1] * H;
    IntegrandValues v;
    v.F = (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * m1;
    v.Fp = ((6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * f1 +
            (3 * t2 - 2 * t) * m1) / H;
    v.Fpp = ((12 * t - 6) * f0 + (6 * t - 4) * m0 + (-12 * t + 6) * f1 + (6 * t - 2) * m1) / (H * H);
    return v;
}

namespace {

void check_common(int n, int q, double B, double vartheta) {
    if (n < 2 || n > 3) throw DomainError("n_dim must be 2 or 3");
    if (q < 2 || q > 3) throw DomainError("q_dim must be 2 or 3");
    if (!(B >= 1.0)) throw DomainError("ellipticity constant B must be >= 1");
    if (!(vartheta >= 0.0)) throw DomainError("vartheta must be >= 0");
}

}  // namespace

IntegrandModel IntegrandModel::dirichlet(int n, int q, double B, double vartheta) {
    check_common(n, q, B, vartheta);
    IntegrandModel m;
    m.kind_ = IntegrandKind::Dirichlet;
    m.n_ = n;
    m.q_ = q;
    m.B_ = B;
    m.vartheta_ = vartheta;
    return m;
}

IntegrandModel IntegrandModel::paper_f1(double beta, int n, int q, double B, double vartheta) {
    check_common(n, q, B, vartheta);
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("F1 requires 0 < beta < 1");
    IntegrandModel m;
    m.kind_ = IntegrandKind::PaperF1;
    m.beta_ = beta;
    m.n_ = n;
    m.q_ = q;
    m.B_ = B;
    m.vartheta_ = vartheta;
    return m;
}

IntegrandModel IntegrandModel::tabulated(std::vector<double> p, std::vector<double> F, int n, int q,
                                         double B, double vartheta) {
    check_common(n, q, B, vartheta);
    IntegrandModel m;
    m.kind_ = IntegrandKind::Tabulated;
    m.n_ = n;
    m.q_ = q;
    m.B_ = B;
    m.vartheta_ = vartheta;
    m.table_ = MonotoneCubic(std::move(p), std::move(F));
    m.fit_tail();
    return m;
}

void IntegrandModel::fit_tail() {
    const auto& p = table_.knots();
    const auto& F = table_.values();
    const std::size_t N = p.size();
    tail_fpp_ = 0.0;
    tail_exponent_ = std::numeric_limits<double>::infinity();
    if (N < 4) return;
    // second divided difference of three consecutive knots, located at their mean
    auto curvature = [&](std::size_t i, double& at) {
        const double s0 = (F[i + 1] - F[i]) / (p[i + 1] - p[i]);
        const double s1 = (F[i + 2] - F[i + 1]) / (p[i + 2] - p[i + 1]);
        at = (p[i] + p[i + 1] + p[i + 2]) / 3.0;
        return 2.0 * (s1 - s0) / (p[i + 2] - p[i]);
    };
    // the second triple sits near p_max / 2 when the table is long enough
    std::size_t j = N - 4;
    while (j > 0 && p[j] > 0.5 * p[N - 1]) --j;
    double a0, a1;
    const double f0 = curvature(j, a0);
    const double f1 = curvature(N - 3, a1);
    if (!(f1 > 0.0) || !(f0 > 0.0) || !(a1 > a0) || !(a0 > 0.0)) return;
    tail_exponent_ = -std::log(f1 / f0) / std::log(a1 / a0);
    tail_fpp_ = f1 * std::pow(p[N - 1] / a1, -tail_exponent_);
}

std::string IntegrandModel::kind_name() const {
    switch (kind_) {
        case IntegrandKind::Dirichlet: return "dirichlet";
        case IntegrandKind::PaperF1: return "f1";
        case IntegrandKind::Tabulated: return "tabulated";
    }
    return "?";
}

IntegrandValues IntegrandModel::base_values(double p) const {
    if (!(p >= 0.0)) throw DomainError("integrand evaluated at negative or NaN p");
    switch (kind_) {
        case IntegrandKind::Dirichlet: return {p, 1.0, 0.0};
        case IntegrandKind::PaperF1: {
            const double b = beta_;
            const double s = std::pow(p + 1.0, -b);
            IntegrandValues v;
            v.F = p * (2.0 - s);
            v.Fp = 2.0 - s + b * p * s / (p + 1.0);
            v.Fpp = b * s / ((p + 1.0) * (p + 1.0)) * ((1.0 - b) * p + 2.0);
            return v;
        }
        case IntegrandKind::Tabulated: return table_.eval(p);
    }
    return {};
}

IntegrandValues IntegrandModel::values(double p) const {
    if (lambda_ == 1.0) return base_values(p);
    const double l2 = lambda_ * lambda_;
    IntegrandValues v = base_values(p / l2);
    return {l2 * v.F, v.Fp, v.Fpp / l2};
}

double IntegrandModel::error_term(double p) const {
    if (!(p >= 0.0)) throw DomainError("integrand evaluated at negative or NaN p");
    switch (kind_) {
        case IntegrandKind::Dirichlet: return 0.0;
        case IntegrandKind::PaperF1: {
            // F_p p - F in cancellation-free form
            const double l2 = lambda_ * lambda_;
            const double s = p / l2;
            return l2 * beta_ * s * s * std::pow(s + 1.0, -beta_ - 1.0);
        }
        case IntegrandKind::Tabulated: {
            const IntegrandValues v = values(p);
            return v.Fp * p - v.F;
        }
    }
    return 0.0;
}

double IntegrandModel::fpp_extended(double p) const {
    if (kind_ != IntegrandKind::Tabulated) return values(p).Fpp;
    const double l2 = lambda_ * lambda_;
    const double s = p / l2;
    if (s <= table_.p_max()) return table_.eval(s).Fpp / l2;
    if (tail_fpp_ == 0.0) return 0.0;
    return tail_fpp_ * std::pow(s / table_.p_max(), -tail_exponent_) / l2;
}

double IntegrandModel::error_extended(double p) const {
    if (kind_ != IntegrandKind::Tabulated) return error_term(p);
    const double l2 = lambda_ * lambda_;
    const double s = p / l2;
    const double pm = table_.p_max();
    if (s <= pm) return error_term(p);
    const IntegrandValues v = table_.eval(pm);
    double e = v.Fp * pm - v.F;
    if (tail_fpp_ != 0.0) {
        const double a = tail_exponent_;
        const double c = tail_fpp_ * std::pow(pm, a);
        if (std::abs(2.0 - a) < 1e-12)
            e += c * std::log(s / pm);
        else
            e += c * (std::pow(s, 2.0 - a) - std::pow(pm, 2.0 - a)) / (2.0 - a);
    }
    return l2 * e;
}

double IntegrandModel::fp_infinity() const {
    switch (kind_) {
        case IntegrandKind::Dirichlet: return 1.0;
        case IntegrandKind::PaperF1: return 2.0;
        case IntegrandKind::Tabulated: {
            const double pm = table_.p_max();
            const double fp = table_.eval(pm).Fp;
            if (tail_fpp_ == 0.0) return fp;
            if (tail_exponent_ <= 1.0) return std::numeric_limits<double>::infinity();
            return fp + tail_fpp_ * pm / (tail_exponent_ - 1.0);
        }
    }
    return 0.0;
}

namespace {

void check_xz(const IntegrandModel& m, std::span<const double> x, std::span<const double> z) {
    if (!x.empty() && static_cast<int>(x.size()) != m.n_dim())
        throw DomainError("x has the wrong dimension");
    if (!z.empty() && static_cast<int>(z.size()) != m.q_dim())
        throw DomainError("z has the wrong dimension");
}

}  // namespace

IntegrandValues eval(const IntegrandModel& model, std::span<const double> x,
                     std::span<const double> z, double p) {
    check_xz(model, x, z);
    return model.values(p);
}

double error_term(const IntegrandModel& model, std::span<const double> x,
                  std::span<const double> z, double p) {
    check_xz(model, x, z);
    return model.error_term(p);
}

double jensen_transform(double g_at_x, const std::function<double(double)>& gprime, double x,
                        const JensenOptions& opt) {
    if (!(x >= 0.0)) throw DomainError("jensen_transform needs x >= 0");
    if (x == 0.0) return g_at_x;
    auto f = [&](double t) { return gprime(t) / t; };
    double tailint = 0.0;
    if (opt.cutoff) {
        const double T = *opt.cutoff;
        if (!(T > x)) throw DomainError("jensen_transform cutoff must exceed x");
        auto phi = [&](double s) { return gprime(std::exp(s)); };
        tailint = integrate(phi, std::log(x), std::log(T), 1e-300, 0.1 * opt.rel_tol).value;
        // local power-law tail beyond the cutoff
        const double p0 = gprime(T), p1 = gprime(2.0 * T);
        if (p0 != 0.0 || p1 != 0.0) {
            const double kappa = (p0 * p1 > 0.0) ? std::log2(p0 / p1) : 0.0;
            const double rest = kappa > 1e-3 ? std::abs(p0) / kappa
                                             : std::numeric_limits<double>::infinity();
            if (rest > opt.rel_tol * std::max(std::abs(tailint), 1e-300))
                throw IntegrabilityError("jensen_transform: tail estimate above tolerance at cutoff");
        }
    } else {
        tailint = integrate_power_tail(f, x, opt.rel_tol).value;
    }
    return g_at_x + x * tailint;
}

double jensen_transform(const std::function<double(double)>& gprime, double x,
                        const JensenOptions& opt) {
    if (!(x >= 0.0)) throw DomainError("jensen_transform needs x >= 0");
    double g = opt.g0;
    if (x > 0.0) g += integrate(gprime, 0.0, x, 1e-300, 1e-12).value;
    return jensen_transform(g, gprime, x, opt);
}

double jensen_error(const IntegrandModel& model, double x) {
    if (model.kind() == IntegrandKind::Dirichlet) return 0.0;
    // the tail integral of e'(t)/t = F''(t) is F'(inf) - F'(x)
    if (!std::isfinite(model.fp_infinity())) throw IntegrabilityError("jensen_error: F' is unbounded");
    auto eprime = [&](double t) { return t * model.fpp_extended(t); };
    return jensen_transform(model.error_extended(x), eprime, x);
}

double correction_h(const IntegrandModel& model, double r) {
    if (!(r >= 0.0)) throw DomainError("correction_h needs r >= 0");
    // e vanishes identically for the Dirichlet energy, whatever A is
    if (model.kind() == IntegrandKind::Dirichlet) return 0.0;
    if (!model.A_constant) throw StateError("correction_h requires a calibrated A");
    if (r == 0.0) return 0.0;
    const double A = *model.A_constant;
    const double c = 2.0 * model.c_e() * A * A;
    // substitute X = c / t^2: h(r) = c int_{c/r^2}^inf J_e(X) X^-2 dX
    auto f = [&](double X) { return jensen_error(model, X) / (X * X); };
    return c * integrate_power_tail(f, c / (r * r), 1e-8).value;
}

double calibrate_A(IntegrandModel& model, double energy_at_scale_one, double A0) {
    if (!(A0 > 0.0)) throw DomainError("calibrate_A needs A0 > 0");
    if (!(energy_at_scale_one >= 0.0)) throw DomainError("calibrate_A needs a nonnegative energy");
    IntegrandModel trial = model;
    double A = A0;
    for (int k = 0; k < 400; ++k, A *= 2.0) {
        if (A * A < energy_at_scale_one) continue;
        trial.A_constant = A;
        if (correction_h(trial, 1.0) <= 0.1 * A * A) {
            model.A_constant = A;
            return A;
        }
    }
    throw IntegrabilityError("calibrate_A: no admissible A found");
}

IntegrandModel rescale_model(const IntegrandModel& model, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("rescale_model needs lambda in (0, 1]");
    IntegrandModel m = model;
    if (m.kind_ != IntegrandKind::Dirichlet) m.lambda_ = model.lambda_ * lambda;
    return m;
}

std::vector<double> log_uniform_samples(double p_max, int count) {
    std::vector<double> s;
    s.push_back(0.0);
    const double lo = std::log(1e-8), hi = std::log(p_max);
    for (int i = 0; i < count; ++i) s.push_back(std::exp(lo + (hi - lo) * i / std::max(1, count - 1)));
    return s;
}

namespace {

std::string range_detail(double lo, double hi) {
    std::ostringstream os;
    os.precision(10);
    os << "min=" << lo << " max=" << hi;
    return os.str();
}

}  // namespace

AssumptionReport verify_assumptions(const IntegrandModel& model, std::span<const double> p_samples) {
    AssumptionReport rep;
    const double B = model.ellipticity_B();
    const double half_nq = 0.5 * model.n_dim() * model.q_dim();
    const double slack = 1e-12;
    double ell_lo = std::numeric_limits<double>::infinity(), ell_hi = -ell_lo;
    double fpp_lo = ell_lo, fp_lo = ell_lo, fp_hi = -ell_lo;
    double pmax = 0.0;
    for (double p : p_samples) {
        if (model.kind() == IntegrandKind::Tabulated) {
            const double l2 = model.scale() * model.scale();
            if (p / l2 < model.table().p_min() || p / l2 > model.table().p_max()) continue;
        }
        const IntegrandValues v = model.values(p);
        const double ell = v.Fpp * p + half_nq * v.Fp;
        ell_lo = std::min(ell_lo, ell);
        ell_hi = std::max(ell_hi, ell);
        fpp_lo = std::min(fpp_lo, v.Fpp);
        fp_lo = std::min(fp_lo, v.Fp);
        fp_hi = std::max(fp_hi, v.Fp);
        pmax = std::max(pmax, p);
    }
    rep.p_max_checked = pmax;
    rep.ellipticity.passed = ell_lo >= (1.0 / B) * (1 - slack) && ell_hi <= B * (1 + slack);
    rep.ellipticity.worst = (ell_lo * B < B / ell_hi) ? ell_lo : ell_hi;
    rep.ellipticity.detail = range_detail(ell_lo, ell_hi);

    rep.xz_growth.passed = true;
    rep.xz_growth.worst = 0.0;
    rep.xz_growth.detail = "integrand independent of (x, z)";

    rep.convexity.passed = fpp_lo >= -slack;
    rep.convexity.worst = fpp_lo;
    rep.convexity.detail = "min F''=" + std::to_string(fpp_lo);

    const double nq = model.n_dim() * model.q_dim();
    rep.derived_fp_bounds.passed = fp_lo >= 2.0 / (B * nq) * (1 - slack) && fp_hi <= 2.0 * B / nq * (1 + slack);
    rep.derived_fp_bounds.worst = fp_lo;
    rep.derived_fp_bounds.detail = range_detail(fp_lo, fp_hi);

    try {
        auto fc = [&](double p) { return model.fpp_extended(p) * std::log(p); };
        rep.C = (model.kind() == IntegrandKind::Dirichlet) ? 0.0 : integrate_power_tail(fc, 1.0, 1e-9).value;
    } catch (const IntegrabilityError&) {
    }
    try {
        auto fd = [&](double X) { return model.error_extended(X) / (X * X); };
        rep.D = (model.kind() == IntegrandKind::Dirichlet) ? 0.0 : 0.5 * integrate_power_tail(fd, 1.0, 1e-9).value;
    } catch (const IntegrabilityError&) {
    }
    rep.integrability.passed = rep.C.has_value() && rep.D.has_value();
    rep.integrability.worst = rep.C.value_or(std::numeric_limits<double>::infinity());
    rep.integrability.detail = std::string("C ") + (rep.C ? std::to_string(*rep.C) : "divergent") +
                               ", D " + (rep.D ? std::to_string(*rep.D) : "divergent");
    return rep;
}

AssumptionReport verify_assumptions(const IntegrandModel& model) {
    const auto s = log_uniform_samples(1e6, 400);
    return verify_assumptions(model, s);
}

}  // namespace fharm
