#pragma once

#include <gmpxx.h>

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "padiclf/errors.hpp"

namespace padiclf {

/**
 * Exact arithmetic in Z/p^W with per-value absolute precision.
 *
 * A PadicScalar is a residue r in [0, p^pi) together with its absolute
 * precision pi: it stands for the coset r + p^pi Z_p.  Zero at precision
 * pi is a first-class value ("unknown beyond p^pi").  The working
 * exponent W of the creating context caps every precision; it travels
 * with the scalar so that arithmetic never needs the context again and
 * values can be shared freely between threads.
 *
 * Propagation rules:
 *   add/sub : pi = min(pi_a, pi_b)
 *   mul     : pi = min(pi_a + v_b, pi_b + v_a), capped at W
 *   div     : strip val(y), invert the unit part, then multiply;
 *             errors if the quotient is not p-integral at the available
 *             precision.
 * The valuation of a zero at precision pi is reported as pi.
 */
class PadicScalar {
public:
    PadicScalar() : p_(0), prec_(0), wcap_(0), residue_(0) {}

    PadicScalar(long p, mpz_class residue, int prec, int wcap);

    long prime() const { return p_; }
    int precision() const { return prec_; }
    int working_cap() const { return wcap_; }
    const mpz_class& residue() const { return residue_; }

    // min(v_p(residue), precision); a zero reports its precision.
    int valuation() const;

    bool is_zero() const { return residue_ == 0; }

    // Same coset intersected with the (possibly lower) precision.
    PadicScalar at_precision(int prec) const;

    PadicScalar operator-() const;
    PadicScalar& operator+=(const PadicScalar& o) { return *this = *this + o; }

    friend PadicScalar operator+(const PadicScalar& a, const PadicScalar& b);
    friend PadicScalar operator-(const PadicScalar& a, const PadicScalar& b);
    friend PadicScalar operator*(const PadicScalar& a, const PadicScalar& b);
    friend PadicScalar operator/(const PadicScalar& a, const PadicScalar& b);

    // Exact multiplication by an integer (precision rises with its valuation).
    PadicScalar times_int(const mpz_class& n) const;

    // Exact division by p^s; the known part must be divisible.
    PadicScalar shift_down(int s) const;

    // True if the two values agree as cosets at the smaller precision.
    bool congruent(const PadicScalar& o) const;

    // (residue as decimal string, precision) — the wire format.
    std::pair<std::string, int> serialized() const;

    static mpz_class pow_p(long p, int e);

private:
    long p_;
    int prec_;
    int wcap_;
    mpz_class residue_;

    static void check_same(const PadicScalar& a, const PadicScalar& b);
};

/**
 * Factory for scalars of a fixed prime and working exponent W.
 * Also memoizes Hensel lifts of unit roots keyed by (a_p, k).
 */
class PadicContext {
public:
    PadicContext(long p, int working_exponent);

    long p() const { return p_; }
    int working_exponent() const { return W_; }
    const mpz_class& p_pow(int e) const;

    PadicScalar from_int(const mpz_class& n) const;
    PadicScalar from_long(long n) const { return from_int(mpz_class(n)); }

    // Embeds a rational whose denominator is a p-unit; errors otherwise.
    PadicScalar from_rational(const mpq_class& q) const;

    PadicScalar zero(int prec) const;
    PadicScalar one() const { return from_long(1); }

    // Caching wrapper around quadratic_unit_root().
    PadicScalar unit_root_cached(const mpq_class& a_p, int k) const;

private:
    long p_;
    int W_;
    std::vector<mpz_class> powers_;
    mutable std::mutex cache_mutex_;
    mutable std::map<std::pair<mpq_class, int>, PadicScalar> root_cache_;
};

// C(-j-1, i) = (-1)^i C(j+i, i), exact as an integer mod p^W.
PadicScalar binom_neg(long j, long i, const PadicContext& ctx);

// Binomial C(m, i) for any integer m (negative upper index allowed), exact.
mpz_class binom_int(long m, unsigned long i);

// Minimal-valuation root of X^2 - a_p X + p^{k-1} to precision W.
// Requires ord_p(a_p) < (k-1)/2; otherwise throws NoUnitRoot.
PadicScalar quadratic_unit_root(const mpq_class& a_p, int k, const PadicContext& ctx);

// The (p-1)-st root of unity congruent to a mod p, to precision W.
PadicScalar teichmuller(const mpz_class& a, const PadicContext& ctx);

// ord_p of a rational (num minus den valuation); a must be nonzero.
long ord_p(const mpq_class& a, long p);

namespace testing {
// Selftest fault hook: flips the sign convention of binom_neg for odd i.
extern bool binom_sign_fault;
} // namespace testing

} // namespace padiclf
