#pragma once

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace ratproof {

/// Exact binary fraction num / 2^exp.
///
/// Values are kept in canonical form: either exp == 0 or num is odd, so two
/// equal values are also equal field by field. Every operation below is
/// closed over dyadics and returns a canonical result.
class Dyadic {
public:
    Dyadic() = default;
    Dyadic(long value) : num_(value) {}  // NOLINT(google-explicit-constructor)
    Dyadic(mpz_class num, std::uint64_t exp);

    /// num / 2^exp for machine-sized numerators.
    static Dyadic ratio(long num, std::uint64_t exp) { return Dyadic(mpz_class(num), exp); }
    /// 2^-exp.
    static Dyadic pow2_neg(std::uint64_t exp) { return Dyadic(mpz_class(1), exp); }

    /// Parses "num/2^exp" (also a bare integer "num").
    static Dyadic parse(std::string_view text);

    const mpz_class& numerator() const { return num_; }
    std::uint64_t exponent() const { return exp_; }

    bool is_zero() const { return sgn(num_) == 0; }
    int sign() const { return sgn(num_); }

    /// Multiplies by 2^shift (shift may be negative).
    Dyadic scaled_pow2(std::int64_t shift) const;

    /// Value * 2^bits if that is an integer.
    bool integer_at_resolution(std::uint64_t bits, mpz_class& out) const;

    std::string to_string() const;

    friend Dyadic operator+(const Dyadic& a, const Dyadic& b);
    friend Dyadic operator-(const Dyadic& a, const Dyadic& b);
    friend Dyadic operator*(const Dyadic& a, const Dyadic& b);
    Dyadic operator-() const;

    Dyadic& operator+=(const Dyadic& other) { return *this = *this + other; }
    Dyadic& operator-=(const Dyadic& other) { return *this = *this - other; }
    Dyadic& operator*=(const Dyadic& other) { return *this = *this * other; }

    friend bool operator==(const Dyadic& a, const Dyadic& b) {
        return a.exp_ == b.exp_ && a.num_ == b.num_;
    }
    friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b);

    friend std::ostream& operator<<(std::ostream& os, const Dyadic& d) { return os << d.to_string(); }

private:
    void normalize();

    mpz_class num_{0};
    std::uint64_t exp_ = 0;
};

/// Puts a value into canonical form. Exposed for property tests.
Dyadic normalize(const mpz_class& num, std::uint64_t exp);

/// Sum of many terms with a single alignment at the end.
class DyadicAccumulator {
public:
    void add(const Dyadic& value);
    void add_scaled(const Dyadic& value, unsigned long factor);
    Dyadic result() const;

private:
    mpz_class num_{0};
    std::uint64_t exp_ = 0;
};

}  // namespace ratproof
