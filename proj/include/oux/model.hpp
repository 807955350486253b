#pragma once

// Shared domain types for the OU stochastic-covariance exchange option model.
//
// The covariance process is Sigma_t = diag(F_t) + A diag(V_t) A', where F and V
// are pairs of Ornstein-Uhlenbeck factors driven by Inverse Gaussian
// subordinators and A is an orthonormal rotation ("loading matrix").

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace oux {

using Complex = std::complex<double>;
inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

using Pair = std::array<double, 2>;

/// Invalid model, contract or numeric parameter. `field()` names the offending
/// entry with its config path (e.g. "model.bF").
class ParameterError : public std::invalid_argument {
public:
    ParameterError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Real 2x2 matrix, row-major.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    double operator()(int row, int col) const {
        if (row == 0) return col == 0 ? a11 : a12;
        return col == 0 ? a21 : a22;
    }
    Mat2 transpose() const { return {a11, a21, a12, a22}; }
    friend Mat2 operator*(const Mat2& x, const Mat2& y) {
        return {x.a11 * y.a11 + x.a12 * y.a21, x.a11 * y.a12 + x.a12 * y.a22,
                x.a21 * y.a11 + x.a22 * y.a21, x.a21 * y.a12 + x.a22 * y.a22};
    }
    friend bool operator==(const Mat2&, const Mat2&) = default;
};

/// Maps any angle to (-pi, pi].
inline double normalize_angle(double theta) {
    if (!std::isfinite(theta)) throw ParameterError("model.theta", "angle must be finite");
    double r = std::remainder(theta, 2.0 * kPi);  // in [-pi, pi]
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

/// Rotation [[cos, -sin], [sin, cos]].
inline Mat2 loading_matrix(double theta) {
    const double t = normalize_angle(theta);
    const double c = std::cos(t);
    const double s = std::sin(t);
    return {c, -s, s, c};
}

/// theta_l = tr(A M C_l A') = (a_{1l} - a_{2l})^2: the weight of common factor
/// V_l inside v+ = tr(M Sigma+).
inline Pair trace_weights(const Mat2& A) {
    const double w1 = A.a11 - A.a21;
    const double w2 = A.a12 - A.a22;
    return {w1 * w1, w2 * w2};
}

struct ModelParams {
    Pair aF{1.0, 1.0};       // IG scale of idiosyncratic factors
    Pair bF{5.0, 5.0};       // IG tail parameter
    Pair aV{1.0, 1.0};       // common factors
    Pair bV{5.0, 5.0};
    Pair lambdaF{1.0, 1.0};  // mean-reversion rates
    Pair lambdaV{1.0, 1.0};
    Pair F0{0.0, 0.0};       // initial factor levels
    Pair V0{0.0, 0.0};
    double theta = kPi / 6.0;

    Mat2 loading() const { return loading_matrix(theta); }
    Pair weights() const { return trace_weights(loading()); }
    bool zero_initial_levels() const {
        return F0[0] == 0.0 && F0[1] == 0.0 && V0[0] == 0.0 && V0[1] == 0.0;
    }

    void validate() const {
        auto positive = [](const Pair& p, const char* name) {
            for (double x : p)
                if (!(x > 0.0) || !std::isfinite(x))
                    throw ParameterError(std::string("model.") + name, "must be strictly positive");
        };
        auto nonnegative = [](const Pair& p, const char* name) {
            for (double x : p)
                if (!(x >= 0.0) || !std::isfinite(x))
                    throw ParameterError(std::string("model.") + name, "must be nonnegative");
        };
        positive(aF, "aF");
        positive(bF, "bF");
        positive(aV, "aV");
        positive(bV, "bV");
        positive(lambdaF, "lambdaF");
        positive(lambdaV, "lambdaV");
        nonnegative(F0, "F0");
        nonnegative(V0, "V0");
        if (!std::isfinite(theta)) throw ParameterError("model.theta", "angle must be finite");
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Which discount factors multiply the two legs of the conditional price.
/// `carry` uses exp(-(r - q_j) T) with M3 = log(cS1/(mS2)) + (q1 - q2) T,
/// which is the convention the benchmark tables were produced with.
/// `classical` is textbook Margrabe: exp(-q_j T) and (q2 - q1) T in d1.
enum class DiscountConvention { carry, classical };

struct ContractParams {
    Pair s0{100.0, 96.0};
    double c = 1.0;
    double m = 1.0;
    Pair q{0.0, 0.0};
    double r = 0.04;
    double T = 1.0;
    DiscountConvention discounting = DiscountConvention::carry;

    void validate() const {
        if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("contract.T", "maturity must be positive");
        if (!(s0[0] > 0.0) || !(s0[1] > 0.0) || !std::isfinite(s0[0]) || !std::isfinite(s0[1]))
            throw ParameterError("contract.s0", "spot prices must be positive");
        if (!(c > 0.0) || !std::isfinite(c)) throw ParameterError("contract.c", "must be positive");
        if (!(m > 0.0) || !std::isfinite(m)) throw ParameterError("contract.m", "must be positive");
        if (!std::isfinite(q[0]) || !std::isfinite(q[1])) throw ParameterError("contract.q", "must be finite");
        if (!std::isfinite(r)) throw ParameterError("contract.r", "must be finite");
    }

    friend bool operator==(const ContractParams&, const ContractParams&) = default;
};

/// The three distinct entries of the symmetric integrated covariance Sigma+_T.
struct IntegratedCovariance {
    double s11 = 0.0;
    double s22 = 0.0;
    double s12 = 0.0;

    Mat2 matrix() const { return {s11, s12, s12, s22}; }
};

/// v+ = tr(M Sigma+) = s11 + s22 - 2 s12. Values in [-1e-12, 0) are rounding
/// noise and clamp to zero; anything more negative is a corrupted covariance.
inline double vplus(const IntegratedCovariance& sigma) {
    const double v = sigma.s11 + sigma.s22 - 2.0 * sigma.s12;
    if (v < -1e-12 || std::isnan(v))
        throw std::domain_error("vplus: integrated covariance has negative total variance");
    return v < 0.0 ? 0.0 : v;
}

/// Sigma+ = diag(F+) + A diag(V+) A'.
inline IntegratedCovariance assemble_covariance(const Pair& Fplus, const Pair& Vplus, const Mat2& A) {
    IntegratedCovariance s;
    s.s11 = Fplus[0] + A.a11 * A.a11 * Vplus[0] + A.a12 * A.a12 * Vplus[1];
    s.s22 = Fplus[1] + A.a21 * A.a21 * Vplus[0] + A.a22 * A.a22 * Vplus[1];
    s.s12 = A.a11 * A.a21 * Vplus[0] + A.a12 * A.a22 * Vplus[1];
    return s;
}

/// Argument matrix of the characteristic function of Sigma+.
struct ComplexMatrixArg {
    Complex t11{}, t22{}, t12{}, t21{};

    /// u * M with M = [[1, -1], [-1, 1]].
    static ComplexMatrixArg scaled_m(Complex u) { return {u, u, -u, -u}; }

    /// -1/2 theta(u) for the joint log-price characteristic function.
    static ComplexMatrixArg logprice(Complex u1, Complex u2) {
        const Complex d1 = u1 * (1.0 - kI * u1);
        const Complex d2 = u2 * (1.0 - kI * u2);
        const Complex off = -kI * u1 * u2;
        return {-0.5 * d1, -0.5 * d2, -0.5 * off, -0.5 * off};
    }

    bool is_zero() const {
        return t11 == Complex{} && t22 == Complex{} && t12 == Complex{} && t21 == Complex{};
    }
};

/// tr(theta A C_l A') = sum_{j,k} theta_{jk} a_{kl} a_{jl}.
inline Complex trace_loading(const ComplexMatrixArg& th, const Mat2& A, int l) {
    const double a1 = A(0, l);
    const double a2 = A(1, l);
    return th.t11 * a1 * a1 + th.t22 * a2 * a2 + (th.t12 + th.t21) * a1 * a2;
}

}  // namespace oux
