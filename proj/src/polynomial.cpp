#include "ratproof/polynomial.hpp"

#include <algorithm>

namespace ratproof {

DyadicPolynomial::DyadicPolynomial(std::vector<Dyadic> coeffs) : coeffs_(std::move(coeffs)) { strip(); }

void DyadicPolynomial::strip() {
    while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
}

Dyadic DyadicPolynomial::eval(const Dyadic& p) const {
    Dyadic acc;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * p + *it;
    return acc;
}

DyadicPolynomial DyadicPolynomial::pow(unsigned exponent) const {
    DyadicPolynomial result{Dyadic(1)};
    DyadicPolynomial base = *this;
    while (exponent) {
        if (exponent & 1u) result = result * base;
        exponent >>= 1u;
        if (exponent) base = base * base;
    }
    return result;
}

DyadicPolynomial operator+(const DyadicPolynomial& a, const DyadicPolynomial& b) {
    std::vector<Dyadic> out(std::max(a.coeffs_.size(), b.coeffs_.size()));
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i) out[i] += a.coeffs_[i];
    for (std::size_t i = 0; i < b.coeffs_.size(); ++i) out[i] += b.coeffs_[i];
    return DyadicPolynomial(std::move(out));
}

DyadicPolynomial operator-(const DyadicPolynomial& a, const DyadicPolynomial& b) {
    return a + Dyadic(-1) * b;
}

DyadicPolynomial operator*(const DyadicPolynomial& a, const DyadicPolynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Dyadic> out(a.coeffs_.size() + b.coeffs_.size() - 1);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return DyadicPolynomial(std::move(out));
}

DyadicPolynomial operator*(const Dyadic& scale, const DyadicPolynomial& q) {
    std::vector<Dyadic> out = q.coeffs_;
    for (auto& c : out) c *= scale;
    return DyadicPolynomial(std::move(out));
}

std::string DyadicPolynomial::to_string() const {
    std::string out = "[";
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        if (i) out += ", ";
        out += coeffs_[i].to_string();
    }
    return out + "]";
}

}  // namespace ratproof
