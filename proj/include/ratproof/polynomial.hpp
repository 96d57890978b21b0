#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "ratproof/dyadic.hpp"

namespace ratproof {

/// Polynomial in one variable with dyadic coefficients; coeffs[i] multiplies p^i.
/// Trailing zeros are always stripped, so the zero polynomial has no coefficients.
class DyadicPolynomial {
public:
    DyadicPolynomial() = default;
    explicit DyadicPolynomial(std::vector<Dyadic> coeffs);
    DyadicPolynomial(std::initializer_list<Dyadic> coeffs)
        : DyadicPolynomial(std::vector<Dyadic>(coeffs)) {}

    /// 1 - p
    static DyadicPolynomial one_minus_p() { return {Dyadic(1), Dyadic(-1)}; }
    /// p
    static DyadicPolynomial identity() { return {Dyadic(0), Dyadic(1)}; }

    const std::vector<Dyadic>& coeffs() const { return coeffs_; }
    /// -1 for the zero polynomial.
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }

    /// Horner evaluation.
    Dyadic eval(const Dyadic& p) const;

    DyadicPolynomial pow(unsigned exponent) const;

    friend DyadicPolynomial operator+(const DyadicPolynomial& a, const DyadicPolynomial& b);
    friend DyadicPolynomial operator-(const DyadicPolynomial& a, const DyadicPolynomial& b);
    friend DyadicPolynomial operator*(const DyadicPolynomial& a, const DyadicPolynomial& b);
    friend DyadicPolynomial operator*(const Dyadic& scale, const DyadicPolynomial& q);
    friend bool operator==(const DyadicPolynomial&, const DyadicPolynomial&) = default;

    /// "[c0, c1, ...]" with coefficients rendered as num/2^exp.
    std::string to_string() const;

private:
    void strip();
    std::vector<Dyadic> coeffs_;
};

inline Dyadic poly_eval(const DyadicPolynomial& q, const Dyadic& p) { return q.eval(p); }

}  // namespace ratproof
