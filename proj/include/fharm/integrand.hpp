#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fharm {

enum class IntegrandKind { Dirichlet, PaperF1, Tabulated };

struct IntegrandValues {
    double F = 0.0;
    double Fp = 0.0;
    double Fpp = 0.0;
};

// Monotone piecewise-cubic (Fritsch-Carlson) interpolant of F(p) samples.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> p, std::vector<double> F);
    IntegrandValues eval(double p) const;
    double p_min() const { return p_.front(); }
    double p_max() const { return p_.back(); }
    const std::vector<double>& knots() const { return p_; }
    const std::vector<double>& values() const { return F_; }

private:
    std::vector<double> p_, F_, m_;
};

// Integrand F(x, z, p) with p = |grad u|^2. The built-in kinds do not depend on
// (x, z), so the x/z derivatives vanish identically.
class IntegrandModel {
public:
    static IntegrandModel dirichlet(int n, int q, double B, double vartheta = 0.0);
    static IntegrandModel paper_f1(double beta, int n, int q, double B, double vartheta = 0.0);
    static IntegrandModel tabulated(std::vector<double> p, std::vector<double> F, int n, int q,
                                    double B, double vartheta = 0.0);

    IntegrandKind kind() const { return kind_; }
    std::string kind_name() const;
    int n_dim() const { return n_; }
    int q_dim() const { return q_; }
    double beta() const { return beta_; }
    double ellipticity_B() const { return B_; }
    double vartheta() const { return vartheta_; }
    // c_e = n q B / 2
    double c_e() const { return 0.5 * n_ * q_ * B_; }
    // lambda of F_lambda(p) = lambda^2 F(p / lambda^2) relative to the base integrand
    double scale() const { return lambda_; }
    const MonotoneCubic& table() const { return table_; }

    std::optional<double> A_constant;
    std::optional<double> integrability_C;
    std::optional<double> integrability_D;

    IntegrandValues values(double p) const;
    // e = F_p p - F
    double error_term(double p) const;
    // Extensions used for the correction integrals. For Tabulated they continue
    // F'' beyond the last sample with the power law fitted to the last samples.
    double fpp_extended(double p) const;
    double error_extended(double p) const;
    // lim_{p->inf} F_p (tail model for Tabulated)
    double fp_infinity() const;

    friend IntegrandModel rescale_model(const IntegrandModel& model, double lambda);

private:
    IntegrandValues base_values(double p) const;
    void fit_tail();

    IntegrandKind kind_ = IntegrandKind::Dirichlet;
    int n_ = 3, q_ = 3;
    double beta_ = 0.0;
    double B_ = 1.0;
    double vartheta_ = 0.0;
    double lambda_ = 1.0;
    MonotoneCubic table_;
    double tail_exponent_ = 0.0;  // F''(p) ~ F''(p_max) (p / p_max)^(-a) beyond the table
    double tail_fpp_ = 0.0;
};

IntegrandValues eval(const IntegrandModel& model, std::span<const double> x,
                     std::span<const double> z, double p);
double error_term(const IntegrandModel& model, std::span<const double> x,
                  std::span<const double> z, double p);

struct JensenOptions {
    // explicit truncation point; automatic (tail bound below rel_tol) when absent
    std::optional<double> cutoff;
    double rel_tol = 1e-10;
    double g0 = 0.0;  // g(0)
};

// J_g(x) = g(x) + x * int_x^inf g'(t)/t dt with g(x) = g0 + int_0^x g'.
double jensen_transform(const std::function<double(double)>& gprime, double x,
                        const JensenOptions& opt = {});
// Same with g(x) supplied directly.
double jensen_transform(double g_at_x, const std::function<double(double)>& gprime, double x,
                        const JensenOptions& opt = {});

// J_e of the model's error term.
double jensen_error(const IntegrandModel& model, double x);

// h(r) = 2 int_0^r t J_e(2 c_e A^2 / t^2) dt. Requires A_constant.
double correction_h(const IntegrandModel& model, double r);

// Smallest A = A0 * 2^k with A^2 >= energy_at_scale_one and h(1) <= 0.1 A^2.
// Stores the result in model.A_constant.
double calibrate_A(IntegrandModel& model, double energy_at_scale_one, double A0 = 1.0);

IntegrandModel rescale_model(const IntegrandModel& model, double lambda);

struct AssumptionItem {
    bool passed = false;
    double worst = 0.0;
    std::string detail;
};

struct AssumptionReport {
    AssumptionItem ellipticity;        // B^-1 <= F''p + (nq/2) F' <= B
    AssumptionItem xz_growth;          // |F_x|, |F_z| <= vartheta p
    AssumptionItem convexity;          // F'' >= 0
    AssumptionItem integrability;      // C and D finite
    AssumptionItem derived_fp_bounds;  // 2/(B nq) <= F' <= 2B/(nq)
    std::optional<double> C;           // int_1^inf F''(p) ln p dp
    std::optional<double> D;           // int_0^1 p e(p^-2) dp
    double p_max_checked = 0.0;
    bool all_passed() const {
        return ellipticity.passed && xz_growth.passed && convexity.passed &&
               integrability.passed && derived_fp_bounds.passed;
    }
};

// log-uniform samples on [0, p_max] (0 included)
std::vector<double> log_uniform_samples(double p_max, int count);

AssumptionReport verify_assumptions(const IntegrandModel& model,
                                    std::span<const double> p_samples);
AssumptionReport verify_assumptions(const IntegrandModel& model);

}  // namespace fharm
