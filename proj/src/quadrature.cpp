#include "fharm/quadrature.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "fharm/error.hpp"

namespace fharm {

namespace {

const double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
const double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
const double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

QuadResult gk15(const Fn& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv1[7], fv2[7];
    const double fc = f(c);
    double k = fc * kWgk[7];
    double g = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        fv1[j] = f(c - dx);
        fv2[j] = f(c + dx);
        k += kWgk[j] * (fv1[j] + fv2[j]);
        if (j % 2 == 1) g += kWg[j / 2] * (fv1[j] + fv2[j]);
    }
    // QUADPACK-style scaling of the Gauss/Kronrod difference
    const double mean = 0.5 * k;
    double asc = kWgk[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j) asc += kWgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
    asc *= std::abs(h);
    double err = std::abs((k - g) * h);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    return {k * h, err};
}

QuadResult adapt(const Fn& f, double a, double b, double tol, int depth, const QuadResult& whole,
                 int& budget) {
    if (whole.error <= tol || depth <= 0 || budget <= 0 || !(std::abs(b - a) > 1e-300)) return whole;
    --budget;
    const double m = 0.5 * (a + b);
    const QuadResult l = gk15(f, a, m);
    const QuadResult r = gk15(f, m, b);
    const QuadResult ql = adapt(f, a, m, 0.5 * tol, depth - 1, l, budget);
    const QuadResult qr = adapt(f, m, b, 0.5 * tol, depth - 1, r, budget);
    return {ql.value + qr.value, ql.error + qr.error};
}

}  // namespace

QuadResult integrate(const Fn& f, double a, double b, double abs_tol, double rel_tol, int max_depth) {
    if (a == b) return {};
    const QuadResult first = gk15(f, a, b);
    const double tol = std::max(abs_tol, rel_tol * std::abs(first.value));
    int budget = 4000;
    QuadResult r = adapt(f, a, b, tol, max_depth, first, budget);
    if (!std::isfinite(r.value)) throw NumericError("quadrature produced a non-finite value");
    return r;
}

QuadResult integrate_power_tail(const Fn& f, double a, double rel_tol, double abs_tol) {
    if (!(a > 0.0)) throw DomainError("integrate_power_tail: lower limit must be positive");
    auto phi = [&](double s) {
        const double t = std::exp(s);
        return f(t) * t;
    };
    const double width = std::log(16.0);
    const double smax = std::log(std::numeric_limits<double>::max()) - 2.0 * width;
    double s = std::log(a);
    QuadResult sum;
    while (true) {
        QuadResult seg;
        try {
            seg = integrate(phi, s, s + width, 1e-300, 0.1 * rel_tol);
        } catch (const NumericError&) {
            throw IntegrabilityError("tail integrand overflows");
        }
        sum.value += seg.value;
        sum.error += seg.error;
        s += width;
        const double p0 = phi(s);
        const double p1 = phi(s + std::log(2.0));
        if (!std::isfinite(p0) || !std::isfinite(p1))
            throw IntegrabilityError("tail integrand is not finite");
        if (p0 == 0.0 && p1 == 0.0) return sum;
        if (p0 * p1 > 0.0 && std::abs(p1) < std::abs(p0)) {
            const double kappa = std::log2(p0 / p1);
            if (kappa > 1e-3) {
                const double tail = std::abs(p0) / kappa;
                if (tail <= rel_tol * std::abs(sum.value) + abs_tol) {
                    sum.error += tail;
                    return sum;
                }
            }
        }
        if (s > smax) throw IntegrabilityError("tail integral does not converge");
    }
}

void gauss_legendre(int m, double* nodes, double* weights) {
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (m == 1) p0 = 1.0;
            const double pm = (m == 1) ? x : p1;
            const double pm1 = (m == 1) ? 1.0 : p0;
            dp = m * (x * pm - pm1) / (x * x - 1.0);
            const double dx = pm / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

}  // namespace fharm
