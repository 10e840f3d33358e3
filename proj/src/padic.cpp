#include "padiclf/padic.hpp"

#include <algorithm>

namespace padiclf {

namespace testing {
bool binom_sign_fault = false;
}

static mpz_class mod_reduce(const mpz_class& x, const mpz_class& m) {
    mpz_class r;
    mpz_mod(r.get_mpz_t(), x.get_mpz_t(), m.get_mpz_t());
    return r;
}

static mpz_class mod_inverse(const mpz_class& a, const mpz_class& m) {
    mpz_class r;
    if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()) == 0)
        throw NonIntegralQuotient("no inverse modulo p^k");
    return r;
}

mpz_class PadicScalar::pow_p(long p, int e) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(std::max(e, 0)));
    return r;
}

PadicScalar::PadicScalar(long p, mpz_class residue, int prec, int wcap)
    : p_(p), prec_(std::min(prec, wcap)), wcap_(wcap), residue_(std::move(residue)) {
    if (p_ < 2) throw PreconditionError("prime must be >= 2");
    if (prec_ < 0) throw PrecisionExhausted("negative precision");
    residue_ = mod_reduce(residue_, pow_p(p_, prec_));
}

int PadicScalar::valuation() const {
    if (residue_ == 0) return prec_;
    mpz_class r = residue_;
    int v = 0;
    while (v < prec_ && mpz_divisible_ui_p(r.get_mpz_t(), static_cast<unsigned long>(p_))) {
        mpz_divexact_ui(r.get_mpz_t(), r.get_mpz_t(), static_cast<unsigned long>(p_));
        ++v;
    }
    return v;
}

PadicScalar PadicScalar::at_precision(int prec) const {
    if (prec > prec_) prec = prec_;
    if (prec < 0) throw PrecisionExhausted("precision reduced below 0");
    return PadicScalar(p_, residue_, prec, wcap_);
}

PadicScalar PadicScalar::operator-() const {
    return PadicScalar(p_, -residue_, prec_, wcap_);
}

void PadicScalar::check_same(const PadicScalar& a, const PadicScalar& b) {
    if (a.p_ != b.p_) throw PreconditionError("mixed primes in arithmetic");
}

PadicScalar operator+(const PadicScalar& a, const PadicScalar& b) {
    PadicScalar::check_same(a, b);
    int prec = std::min(a.prec_, b.prec_);
    return PadicScalar(a.p_, a.residue_ + b.residue_, prec, std::min(a.wcap_, b.wcap_));
}

PadicScalar operator-(const PadicScalar& a, const PadicScalar& b) {
    PadicScalar::check_same(a, b);
    int prec = std::min(a.prec_, b.prec_);
    return PadicScalar(a.p_, a.residue_ - b.residue_, prec, std::min(a.wcap_, b.wcap_));
}

PadicScalar operator*(const PadicScalar& a, const PadicScalar& b) {
    PadicScalar::check_same(a, b);
    int wcap = std::min(a.wcap_, b.wcap_);
    long prec = std::min<long>(static_cast<long>(a.prec_) + b.valuation(),
                               static_cast<long>(b.prec_) + a.valuation());
    prec = std::min<long>(prec, wcap);
    return PadicScalar(a.p_, a.residue_ * b.residue_, static_cast<int>(prec), wcap);
}

PadicScalar PadicScalar::times_int(const mpz_class& n) const {
    if (n == 0) return PadicScalar(p_, 0, wcap_, wcap_);
    mpz_class m = n;
    int v = 0;
    while (mpz_divisible_ui_p(m.get_mpz_t(), static_cast<unsigned long>(p_)) && v < wcap_) {
        mpz_divexact_ui(m.get_mpz_t(), m.get_mpz_t(), static_cast<unsigned long>(p_));
        ++v;
    }
    int prec = std::min(prec_ + v, wcap_);
    return PadicScalar(p_, residue_ * n, prec, wcap_);
}

PadicScalar PadicScalar::shift_down(int s) const {
    if (s == 0) return *this;
    if (s < 0) return times_int(pow_p(p_, -s));
    if (prec_ - s <= 0)
        throw PrecisionExhausted("shift_down exhausts precision");
    mpz_class ps = pow_p(p_, s);
    if (!mpz_divisible_p(residue_.get_mpz_t(), ps.get_mpz_t()))
        throw NonIntegralQuotient("shift_down of a value not divisible by p^s");
    mpz_class r;
    mpz_divexact(r.get_mpz_t(), residue_.get_mpz_t(), ps.get_mpz_t());
    return PadicScalar(p_, r, prec_ - s, wcap_);
}

PadicScalar operator/(const PadicScalar& a, const PadicScalar& b) {
    PadicScalar::check_same(a, b);
    int v = b.valuation();
    if (v >= b.prec_)
        throw PrecisionExhausted("division by a value indistinguishable from 0");
    PadicScalar num = a.shift_down(v); // throws NonIntegralQuotient when v_p(a) < v
    PadicScalar unit = b.shift_down(v);
    mpz_class inv = mod_inverse(unit.residue(), PadicScalar::pow_p(b.prime(), unit.precision()));
    PadicScalar unit_inv(b.prime(), inv, unit.precision(), b.working_cap());
    return num * unit_inv;
}

bool PadicScalar::congruent(const PadicScalar& o) const {
    if (p_ != o.p_) return false;
    int prec = std::min(prec_, o.prec_);
    mpz_class m = pow_p(p_, prec);
    return mod_reduce(residue_ - o.residue_, m) == 0;
}

std::pair<std::string, int> PadicScalar::serialized() const {
    return {residue_.get_str(10), prec_};
}

PadicContext::PadicContext(long p, int working_exponent) : p_(p), W_(working_exponent) {
    if (p_ < 2) throw PreconditionError("prime must be >= 2");
    if (W_ < 1) throw PreconditionError("working exponent must be >= 1");
    powers_.reserve(W_ + 1);
    mpz_class x = 1;
    for (int i = 0; i <= W_; ++i) {
        powers_.push_back(x);
        x *= p_;
    }
}

const mpz_class& PadicContext::p_pow(int e) const {
    if (e < 0 || e > W_) throw PreconditionError("p_pow exponent out of range");
    return powers_[static_cast<size_t>(e)];
}

PadicScalar PadicContext::from_int(const mpz_class& n) const {
    return PadicScalar(p_, n, W_, W_);
}

PadicScalar PadicContext::from_rational(const mpq_class& q) const {
    mpz_class den = q.get_den();
    if (mpz_divisible_ui_p(den.get_mpz_t(), static_cast<unsigned long>(p_)))
        throw NonIntegralQuotient("rational with p in the denominator");
    mpz_class inv = mod_inverse(den, p_pow(W_));
    return PadicScalar(p_, q.get_num() * inv, W_, W_);
}

PadicScalar PadicContext::zero(int prec) const {
    return PadicScalar(p_, 0, prec, W_);
}

PadicScalar PadicContext::unit_root_cached(const mpq_class& a_p, int k) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto key = std::make_pair(a_p, k);
    auto it = root_cache_.find(key);
    if (it != root_cache_.end()) return it->second;
    PadicScalar r = quadratic_unit_root(a_p, k, *this);
    root_cache_.emplace(key, r);
    return r;
}

mpz_class binom_int(long m, unsigned long i) {
    if (m >= 0) {
        if (i > static_cast<unsigned long>(m)) return 0;
        mpz_class r;
        mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(m), i);
        return r;
    }
    // C(m, i) = (-1)^i C(-m-1+i, i)
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(-m - 1 + static_cast<long>(i)), i);
    if (i % 2 == 1) r = -r;
    return r;
}

PadicScalar binom_neg(long j, long i, const PadicContext& ctx) {
    if (j < 0 || i < 0) throw PreconditionError("binom_neg needs j, i >= 0");
    mpz_class r = binom_int(-j - 1, static_cast<unsigned long>(i));
    if (testing::binom_sign_fault && (i % 2 == 1)) r = -r;
    return ctx.from_int(r);
}

long ord_p(const mpq_class& a, long p) {
    if (a == 0) throw PreconditionError("ord_p(0) is infinite");
    auto count = [&](mpz_class x) {
        long v = 0;
        while (mpz_divisible_ui_p(x.get_mpz_t(), static_cast<unsigned long>(p))) {
            mpz_divexact_ui(x.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(p));
            ++v;
        }
        return v;
    };
    return count(a.get_num()) - count(a.get_den());
}

PadicScalar quadratic_unit_root(const mpq_class& a_p, int k, const PadicContext& ctx) {
    if (k < 2) throw PreconditionError("weight must be >= 2");
    long p = ctx.p();
    int W = ctx.working_exponent();
    if (a_p == 0) throw NoUnitRoot("a_p = 0 has no integral-slope root");
    long v = ord_p(a_p, p);
    if (2 * v >= k - 1) throw NoUnitRoot("ord_p(a_p) >= (k-1)/2");

    // alpha = p^v u with u the unit root of U^2 - (a_p/p^v) U + p^{k-1-2v}.
    mpq_class b = a_p / mpq_class(PadicScalar::pow_p(p, static_cast<int>(v)));
    mpz_class mod = ctx.p_pow(W);
    mpz_class bz = mod_reduce(b.get_num() * mod_inverse(b.get_den(), mod), mod);
    mpz_class cz = PadicScalar::pow_p(p, k - 1 - 2 * static_cast<int>(v));

    // Newton iteration for f(u) = u^2 - b u + c from the simple root u = b mod p.
    mpz_class u = mod_reduce(bz, mpz_class(p));
    int prec = 1;
    while (prec < W) {
        prec = std::min(2 * prec, W);
        mpz_class m = ctx.p_pow(prec);
        mpz_class f = mod_reduce(u * u - bz * u + cz, m);
        mpz_class fp = mod_reduce(2 * u - bz, m);
        u = mod_reduce(u - f * mod_inverse(fp, m), m);
    }
    mpz_class f = mod_reduce(u * u - bz * u + cz, mod);
    if (f != 0) throw InternalError("Hensel iteration failed to converge");
    return ctx.from_int(u).times_int(PadicScalar::pow_p(p, static_cast<int>(v)));
}

PadicScalar teichmuller(const mpz_class& a, const PadicContext& ctx) {
    long p = ctx.p();
    if (mpz_divisible_ui_p(a.get_mpz_t(), static_cast<unsigned long>(p)))
        throw PreconditionError("teichmuller needs p coprime to a");
    const mpz_class& mod = ctx.p_pow(ctx.working_exponent());
    mpz_class x = mod_reduce(a, mod);
    for (int i = 0; i <= ctx.working_exponent() + 1; ++i) {
        mpz_class y;
        mpz_powm_ui(y.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(p), mod.get_mpz_t());
        if (y == x) return ctx.from_int(x);
        x = y;
    }
    throw InternalError("teichmuller limit did not stabilize");
}

} // namespace padiclf
