#pragma once

// Exact rational arithmetic on 64-bit numerator/denominator.
// All operations normalize (gcd-reduced, denominator > 0) and use 128-bit
// intermediates; overflow past int64 throws instead of wrapping.

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace symv {

struct OverflowError : std::runtime_error {
    explicit OverflowError(const std::string& what) : std::runtime_error(what) {}
};

class Rational {
public:
    Rational() : n_(0), d_(1) {}
    Rational(long long n) : n_(n), d_(1) {}
    Rational(long long n, long long d) : n_(n), d_(d) { normalize(); }

    long long num() const { return n_; }
    long long den() const { return d_; }

    bool is_zero() const { return n_ == 0; }
    bool is_one() const { return n_ == 1 && d_ == 1; }
    bool is_integer() const { return d_ == 1; }
    bool is_negative() const { return n_ < 0; }

    double to_double() const { return static_cast<double>(n_) / static_cast<double>(d_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        __int128 n = i128(a.n_) * b.d_ + i128(b.n_) * a.d_;
        __int128 d = i128(a.d_) * b.d_;
        return make(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        __int128 n = i128(a.n_) * b.d_ - i128(b.n_) * a.d_;
        __int128 d = i128(a.d_) * b.d_;
        return make(n, d);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make(i128(a.n_) * b.n_, i128(a.d_) * b.d_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.n_ == 0) throw std::domain_error("rational division by zero");
        return make(i128(a.n_) * b.d_, i128(a.d_) * b.n_);
    }
    Rational operator-() const { return Rational(-n_, d_); }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.n_ == b.n_ && a.d_ == b.d_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.n_) * b.d_ < i128(b.n_) * a.d_;
    }

    // Integral power; exponent may be negative (inverts; zero base throws).
    Rational pow_int(long long e) const {
        Rational base = *this;
        if (e < 0) {
            if (n_ == 0) throw std::domain_error("0 raised to negative power");
            base = Rational(d_, n_);
            e = -e;
        }
        Rational acc(1);
        while (e > 0) {
            if (e & 1) acc = acc * base;
            base = (e > 1) ? base * base : base;
            e >>= 1;
        }
        return acc;
    }

    std::string str() const {
        if (d_ == 1) return std::to_string(n_);
        return std::to_string(n_) + "/" + std::to_string(d_);
    }

    // gcd of |a|,|c| over lcm of denominators; used for content extraction.
    static Rational content_gcd(const Rational& a, const Rational& b) {
        long long gn = std::gcd(a.n_ < 0 ? -a.n_ : a.n_, b.n_ < 0 ? -b.n_ : b.n_);
        long long gd = std::lcm(a.d_, b.d_);
        if (gn == 0) gn = 1;
        return Rational(gn, gd);
    }

private:
    long long n_, d_;
    static __int128 i128(long long v) { return static_cast<__int128>(v); }

    static Rational make(__int128 n, __int128 d) {
        if (d == 0) throw std::domain_error("rational with zero denominator");
        if (d < 0) { n = -n; d = -d; }
        __int128 a = n < 0 ? -n : n, b = d;
        while (b) { __int128 t = a % b; a = b; b = t; }
        if (a > 1) { n /= a; d /= a; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw OverflowError("rational overflow");
        Rational r;
        r.n_ = static_cast<long long>(n);
        r.d_ = static_cast<long long>(d);
        return r;
    }

    void normalize() {
        Rational r = make(n_, d_);
        n_ = r.n_;
        d_ = r.d_;
    }
};

}  // namespace symv
