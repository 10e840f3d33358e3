#include "padiclf/moments.hpp"

#include <algorithm>

namespace padiclf {

IntMatrix2 IntMatrix2::inverse() const {
    mpz_class dt = det();
    if (dt == 1) return IntMatrix2(d, -b, -c, a);
    if (dt == -1) return IntMatrix2(-d, b, c, -a);
    throw PreconditionError("inverse only for det = +-1");
}

IntMatrix2 IntMatrix2::operator*(const IntMatrix2& o) const {
    return IntMatrix2(a * o.a + b * o.c, a * o.b + b * o.d,
                      c * o.a + d * o.c, c * o.b + d * o.d);
}

bool IntMatrix2::in_sigma0(long p) const {
    return det() != 0 && mpz_divisible_ui_p(c.get_mpz_t(), static_cast<unsigned long>(p)) &&
           !mpz_divisible_ui_p(a.get_mpz_t(), static_cast<unsigned long>(p));
}

bool IntMatrix2::in_gamma0(long level) const {
    return det() == 1 && mpz_divisible_ui_p(c.get_mpz_t(), static_cast<unsigned long>(level));
}

MomentDistribution::MomentDistribution(int k_, int M_, std::vector<PadicScalar> mu_)
    : k(k_), M(M_), mu(std::move(mu_)) {
    if (k < 2 || M < 0) throw PreconditionError("need k >= 2, M >= 0");
    if (static_cast<int>(mu.size()) != M + k - 1)
        throw PreconditionError("moment vector must have M+k-1 entries");
}

// Reduce to the nominal profile of a depth-M class.  Fresh values start
// here; action outputs may carry more precision than the profile (the
// one-step depth gain is exactly what the convergence ledger consumes),
// so this is not re-applied to arithmetic results.
void MomentDistribution::clamp_profile() {
    for (int i = 0; i < size(); ++i) {
        int cap = nominal_precision(i);
        if (mu[static_cast<size_t>(i)].precision() > cap)
            mu[static_cast<size_t>(i)] = mu[static_cast<size_t>(i)].at_precision(cap);
    }
}

MomentDistribution MomentDistribution::zero(const PadicContext& ctx, int k, int M) {
    std::vector<PadicScalar> v;
    v.reserve(static_cast<size_t>(M + k - 1));
    for (int i = 0; i < M + k - 1; ++i)
        v.push_back(ctx.zero(std::min(ctx.working_exponent(), i <= k - 2 ? ctx.working_exponent() : M + k - 1 - i)));
    return MomentDistribution(k, M, std::move(v));
}

MomentDistribution MomentDistribution::dirac0(const PadicContext& ctx, int k, int M) {
    MomentDistribution z = zero(ctx, k, M);
    z.mu[0] = ctx.one();
    return z;
}

MomentDistribution MomentDistribution::operator+(const MomentDistribution& o) const {
    if (k != o.k || M != o.M) throw PreconditionError("shape mismatch in moment sum");
    std::vector<PadicScalar> v;
    v.reserve(mu.size());
    for (size_t i = 0; i < mu.size(); ++i) v.push_back(mu[i] + o.mu[i]);
    return MomentDistribution(k, M, std::move(v));
}

MomentDistribution MomentDistribution::operator-(const MomentDistribution& o) const {
    if (k != o.k || M != o.M) throw PreconditionError("shape mismatch in moment difference");
    std::vector<PadicScalar> v;
    v.reserve(mu.size());
    for (size_t i = 0; i < mu.size(); ++i) v.push_back(mu[i] - o.mu[i]);
    return MomentDistribution(k, M, std::move(v));
}

MomentDistribution MomentDistribution::negate() const {
    std::vector<PadicScalar> v;
    v.reserve(mu.size());
    for (const auto& m : mu) v.push_back(-m);
    return MomentDistribution(k, M, std::move(v));
}

MomentDistribution MomentDistribution::times_scalar(const PadicScalar& s) const {
    std::vector<PadicScalar> v;
    v.reserve(mu.size());
    for (const auto& m : mu) v.push_back(m * s);
    return MomentDistribution(k, M, std::move(v));
}

MomentDistribution MomentDistribution::times_int(const mpz_class& n) const {
    std::vector<PadicScalar> v;
    v.reserve(mu.size());
    for (const auto& m : mu) v.push_back(m.times_int(n));
    return MomentDistribution(k, M, std::move(v));
}

MomentDistribution act(const MomentDistribution& dist, const IntMatrix2& gamma) {
    long p = dist.p();
    if (!gamma.in_sigma0(p)) throw NotInSigma0("act needs a matrix in Sigma_0(p)");

    const int k = dist.k, M = dist.M, L = dist.size() - 1;
    int W = dist.wcap();
    PadicContext ctx(p, W);

    // c/a with its p-valuation; every dropped tail term carries (c/a)^j.
    int vc = W;
    if (gamma.c != 0) {
        mpz_class cc = gamma.c;
        vc = 0;
        while (vc < W && mpz_divisible_ui_p(cc.get_mpz_t(), static_cast<unsigned long>(p))) {
            mpz_divexact_ui(cc.get_mpz_t(), cc.get_mpz_t(), static_cast<unsigned long>(p));
            ++vc;
        }
    }
    PadicScalar ca = ctx.from_int(gamma.c) / ctx.from_int(gamma.a);
    PadicScalar a_inv = ctx.one() / ctx.from_int(gamma.a);

    // Powers of (c/a), b, d, a^{-1} up to what the sums read.
    std::vector<PadicScalar> ca_pow{ctx.one()}, b_pow{ctx.one()}, d_pow{ctx.one()};
    for (int i = 1; i <= L; ++i) {
        ca_pow.push_back(ca_pow.back() * ca);
        b_pow.push_back(b_pow.back().times_int(gamma.b));
        d_pow.push_back(d_pow.back().times_int(gamma.d));
    }

    std::vector<PadicScalar> out;
    out.reserve(static_cast<size_t>(L + 1));
    for (int n = 0; n <= L; ++n) {
        // Truncation: terms with j+l > L were dropped; each is divisible by
        // p^{vc*(L+1-n)} (j >= L+1-l >= L+1-n there), so cap the output.
        long trunc_cap = (n <= k - 2) ? W : std::min<long>(static_cast<long>(vc) * (L + 1 - n), W);
        PadicScalar acc = ctx.zero(W);
        for (int l = 0; l <= n; ++l) {
            mpz_class cnl = binom_int(n, static_cast<unsigned long>(l));
            PadicScalar base = b_pow[static_cast<size_t>(n - l)] * d_pow[static_cast<size_t>(l)];
            base = base.times_int(cnl);
            for (int j = 0; j + l <= L; ++j) {
                if (k - 2 - n >= 0 && j > k - 2 - n) break; // polynomial case: finite sum
                if (static_cast<long>(vc) * j >= trunc_cap && j > 0) break;
                mpz_class bin = binom_int(k - 2 - n, static_cast<unsigned long>(j));
                if (bin == 0) continue;
                PadicScalar term = ca_pow[static_cast<size_t>(j)].times_int(bin) * base *
                                   dist.moment(j + l);
                acc = acc + term;
            }
        }
        // a^{k-2-n}: negative exponents via the inverse (a is a p-unit).
        int e = k - 2 - n;
        PadicScalar apw = ctx.one();
        if (e >= 0) {
            for (int i = 0; i < e; ++i) apw = apw.times_int(gamma.a);
        } else {
            for (int i = 0; i < -e; ++i) apw = apw * a_inv;
        }
        acc = acc * apw;
        if (acc.precision() > trunc_cap) acc = acc.at_precision(static_cast<int>(trunc_cap));
        out.push_back(acc);
    }
    return MomentDistribution(k, M, std::move(out));
}

MomentDistribution act_beta(const MomentDistribution& dist, const mpz_class& b, int s) {
    if (s < 1) throw PreconditionError("act_beta needs s >= 1");
    const int k = dist.k, M = dist.M, L = dist.size() - 1;
    long p = dist.p();
    int W = dist.wcap();
    PadicContext ctx(p, W);

    std::vector<PadicScalar> negb_pow{ctx.one()};
    for (int i = 1; i <= L; ++i) negb_pow.push_back(negb_pow.back().times_int(-b));

    std::vector<PadicScalar> out;
    out.reserve(static_cast<size_t>(L + 1));
    for (int n = 0; n <= L; ++n) {
        PadicScalar acc = ctx.zero(W);
        for (int j = 0; j <= n; ++j) {
            if (static_cast<long>(s) * j >= W) break; // p^{sj} mu_j vanishes mod p^W
            mpz_class bin = binom_int(-j - 1, static_cast<unsigned long>(n - j));
            if (testing::binom_sign_fault && ((n - j) % 2 == 1)) bin = -bin;
            PadicScalar term = dist.moment(j).times_int(PadicScalar::pow_p(p, s * j));
            term = term.times_int(bin) * negb_pow[static_cast<size_t>(n - j)];
            acc = acc + term;
        }
        out.push_back(acc);
    }
    return MomentDistribution(k, M, std::move(out));
}

MomentDistribution u_p(const MomentDistribution& dist) {
    long p = dist.p();
    MomentDistribution acc = act_beta(dist, 0, 1);
    for (long b = 1; b < p; ++b) acc = acc + act_beta(dist, b, 1);
    return acc;
}

std::vector<PadicScalar> rho_k(const MomentDistribution& dist) {
    std::vector<PadicScalar> out;
    out.reserve(static_cast<size_t>(dist.k - 1));
    for (int j = 0; j <= dist.k - 2; ++j) {
        mpz_class bin = binom_int(dist.k - 2, static_cast<unsigned long>(j));
        if (j % 2 == 1) bin = -bin;
        out.push_back(dist.moment(j).times_int(bin));
    }
    return out;
}

PadicScalar pairing(const std::vector<PadicScalar>& poly_mu,
                    const std::vector<PadicScalar>& poly_f,
                    int k, const PadicContext& ctx) {
    if (static_cast<int>(poly_mu.size()) > k - 1 || static_cast<int>(poly_f.size()) > k - 1)
        throw PreconditionError("pairing needs degree <= k-2");
    PadicScalar acc = ctx.zero(ctx.working_exponent());
    for (size_t j = 0; j < poly_mu.size() && j < poly_f.size(); ++j) {
        PadicScalar num = poly_mu[j] * poly_f[j];
        if (j % 2 == 1) num = -num;
        PadicScalar den = ctx.from_int(binom_int(k - 2, static_cast<unsigned long>(j)));
        acc = acc + num / den;
    }
    return acc;
}

std::optional<int> fil_level(const MomentDistribution& dist) {
    return scaled_fil_level(dist, 0);
}

std::optional<int> scaled_fil_level(const MomentDistribution& dist, int e) {
    // Level of dist / p^e, certified from what is stored: low moments must
    // vanish at their precision; the certified valuation of true moment
    // k-2+j is (stored valuation) - e, and index j constrains the level
    // only while j <= level (the filtration says nothing beyond).
    for (int i = 0; i <= dist.k - 2; ++i)
        if (!dist.moment(i).is_zero()) return std::nullopt;

    std::vector<long> cert(static_cast<size_t>(dist.M + 1), 0);
    for (int j = 1; j <= dist.M; ++j) {
        const PadicScalar& m = dist.moment(dist.k - 2 + j);
        long v = m.is_zero() ? m.precision() : m.valuation();
        cert[static_cast<size_t>(j)] = v - e;
    }
    long t = dist.M;
    for (;;) {
        long t2 = dist.M;
        for (int j = 1; j <= std::min<long>(t, dist.M); ++j)
            t2 = std::min(t2, cert[static_cast<size_t>(j)] + j - 1);
        if (t2 >= t) break;
        t = t2;
    }
    return static_cast<int>(std::max<long>(t, 0));
}

MomentDistribution solve_gamma1(const MomentDistribution& nu) {
    const int k = nu.k, M = nu.M, L = nu.size() - 1;
    if (!nu.moment(0).is_zero())
        throw NonzeroConstantTerm("solve_gamma1 needs vanishing moment 0");
    long p = nu.p();
    int W = nu.wcap();
    PadicContext ctx(p, W);

    std::vector<PadicScalar> x;
    x.reserve(nu.mu.size());
    for (int n = 1; n <= L; ++n) {
        PadicScalar rhs = nu.moment(n);
        for (int l = 0; l <= n - 2; ++l)
            rhs = rhs - x[static_cast<size_t>(l)].times_int(binom_int(n, static_cast<unsigned long>(l)));
        x.push_back(rhs / ctx.from_long(n));
    }
    x.push_back(ctx.zero(0)); // top moment is undetermined
    return MomentDistribution(k, M, std::move(x));
}

MomentDistribution scale_shift(const MomentDistribution& dist, int s) {
    if (s == 0) return dist;
    const int k = dist.k, M = dist.M;
    long p = dist.p();
    int W = dist.wcap();
    PadicContext ctx(p, W);
    if (s > 0) {
        std::vector<PadicScalar> v;
        v.reserve(static_cast<size_t>(M + s + k - 1));
        for (int i = 0; i < dist.size(); ++i)
            v.push_back(dist.moment(i).times_int(ctx.p_pow(s)));
        // new top indices: p^s * (unknown integral moment) is 0 mod p^{profile}
        for (int i = dist.size(); i < M + s + k - 1; ++i)
            v.push_back(ctx.zero(std::max(M + s + k - 1 - i, 0)));
        return MomentDistribution(k, M + s, std::move(v));
    }
    auto fl = fil_level(dist);
    if (!fl || *fl < -s) throw NegativeShiftBelowFloor("scale_shift below the filtration floor");
    int t = -s;
    std::vector<PadicScalar> v;
    v.reserve(static_cast<size_t>(M - t + k - 1));
    for (int i = 0; i < M - t + k - 1; ++i) {
        const PadicScalar& m = dist.moment(i);
        if (m.is_zero())
            v.push_back(ctx.zero(std::max(m.precision() - t, 0)));
        else
            v.push_back(m.shift_down(t));
    }
    return MomentDistribution(k, M - t, std::move(v));
}

} // namespace padiclf
