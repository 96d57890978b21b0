#include "ratproof/dyadic.hpp"

#include <algorithm>
#include <charconv>

#include "ratproof/errors.hpp"

namespace ratproof {

namespace {

mpz_class shl(const mpz_class& v, std::uint64_t bits) {
    mpz_class out;
    mpz_mul_2exp(out.get_mpz_t(), v.get_mpz_t(), bits);
    return out;
}

}  // namespace

Dyadic::Dyadic(mpz_class num, std::uint64_t exp) : num_(std::move(num)), exp_(exp) { normalize(); }

void Dyadic::normalize() {
    if (sgn(num_) == 0) {
        exp_ = 0;
        return;
    }
    if (exp_ == 0) return;
    const std::uint64_t twos = mpz_scan1(num_.get_mpz_t(), 0);
    const std::uint64_t drop = std::min<std::uint64_t>(twos, exp_);
    if (drop) {
        mpz_fdiv_q_2exp(num_.get_mpz_t(), num_.get_mpz_t(), drop);
        exp_ -= drop;
    }
}

Dyadic normalize(const mpz_class& num, std::uint64_t exp) { return Dyadic(num, exp); }

Dyadic operator+(const Dyadic& a, const Dyadic& b) {
    if (a.exp_ == b.exp_) return Dyadic(a.num_ + b.num_, a.exp_);
    if (a.exp_ > b.exp_) return Dyadic(a.num_ + shl(b.num_, a.exp_ - b.exp_), a.exp_);
    return Dyadic(shl(a.num_, b.exp_ - a.exp_) + b.num_, b.exp_);
}

Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }

Dyadic operator*(const Dyadic& a, const Dyadic& b) {
    return Dyadic(a.num_ * b.num_, a.exp_ + b.exp_);
}

Dyadic Dyadic::operator-() const {
    Dyadic out = *this;
    out.num_ = -out.num_;
    return out;
}

std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
    int c;
    if (a.exp_ == b.exp_) {
        c = cmp(a.num_, b.num_);
    } else if (a.exp_ > b.exp_) {
        c = cmp(a.num_, shl(b.num_, a.exp_ - b.exp_));
    } else {
        c = cmp(shl(a.num_, b.exp_ - a.exp_), b.num_);
    }
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

Dyadic Dyadic::scaled_pow2(std::int64_t shift) const {
    if (shift >= 0) {
        const auto s = static_cast<std::uint64_t>(shift);
        if (s >= exp_) return Dyadic(shl(num_, s - exp_), 0);
        return Dyadic(num_, exp_ - s);
    }
    return Dyadic(num_, exp_ + static_cast<std::uint64_t>(-shift));
}

bool Dyadic::integer_at_resolution(std::uint64_t bits, mpz_class& out) const {
    if (exp_ > bits) return false;
    out = shl(num_, bits - exp_);
    return true;
}

std::string Dyadic::to_string() const { return num_.get_str() + "/2^" + std::to_string(exp_); }

Dyadic Dyadic::parse(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    std::string_view num_text = text;
    std::uint64_t exp = 0;
    if (const auto slash = text.find('/'); slash != std::string_view::npos) {
        num_text = text.substr(0, slash);
        std::string_view rest = text.substr(slash + 1);
        if (rest.size() < 3 || rest.substr(0, 2) != "2^")
            throw ParseError(0, "dyadic literal '" + std::string(text) + "' must have the form num/2^exp");
        rest.remove_prefix(2);
        const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), exp);
        if (ec != std::errc{} || ptr != rest.data() + rest.size())
            throw ParseError(0, "bad exponent in dyadic literal '" + std::string(text) + "'");
    }
    std::string digits(num_text);
    const bool negative = !digits.empty() && digits.front() == '-';
    const std::string body = negative ? digits.substr(1) : digits;
    if (body.empty() || !std::all_of(body.begin(), body.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
        throw ParseError(0, "bad numerator in dyadic literal '" + std::string(text) + "'");
    return Dyadic(mpz_class(digits, 10), exp);
}

void DyadicAccumulator::add(const Dyadic& value) {
    if (value.is_zero()) return;
    const std::uint64_t e = value.exponent();
    if (e > exp_) {
        mpz_mul_2exp(num_.get_mpz_t(), num_.get_mpz_t(), e - exp_);
        exp_ = e;
        num_ += value.numerator();
    } else if (e == exp_) {
        num_ += value.numerator();
    } else {
        num_ += shl(value.numerator(), exp_ - e);
    }
}

void DyadicAccumulator::add_scaled(const Dyadic& value, unsigned long factor) {
    if (factor == 0 || value.is_zero()) return;
    add(Dyadic(value.numerator() * factor, value.exponent()));
}

Dyadic DyadicAccumulator::result() const { return Dyadic(num_, exp_); }

}  // namespace ratproof
