#pragma once

#include <optional>
#include <vector>

#include "padiclf/padic.hpp"

namespace padiclf {

/**
 * 2x2 integer matrix.  Hosts the congruence-subgroup and Sigma_0(p)
 * membership tests and the Moebius action on cusps.
 */
struct IntMatrix2 {
    mpz_class a, b, c, d;

    IntMatrix2() : a(1), b(0), c(0), d(1) {}
    IntMatrix2(mpz_class a_, mpz_class b_, mpz_class c_, mpz_class d_)
        : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), d(std::move(d_)) {}
    static IntMatrix2 identity() { return IntMatrix2(); }

    mpz_class det() const { return a * d - b * c; }

    // Inverse for det = +-1 matrices only.
    IntMatrix2 inverse() const;

    IntMatrix2 operator*(const IntMatrix2& o) const;
    bool operator==(const IntMatrix2& o) const { return a == o.a && b == o.b && c == o.c && d == o.d; }

    bool in_sigma0(long p) const;      // det != 0, p | c, p does not divide a
    bool in_gamma0(long level) const;  // det = 1 and level | c
};

/**
 * Truncated distribution of weight k and depth M, stored as the moment
 * vector mu(z^0), ..., mu(z^{M+k-2}) with one PadicScalar per index.
 *
 * The nominal precision profile is W for indices <= k-2 and M+k-1-i for
 * the rest; stored precisions never exceed it.  All moments are kept
 * p-integral; a non-integral distribution is represented by an explicit
 * scalar prefactor carried by the caller.
 */
struct MomentDistribution {
    int k = 2;
    int M = 0;
    std::vector<PadicScalar> mu; // size M + k - 1

    MomentDistribution() = default;
    MomentDistribution(int k_, int M_, std::vector<PadicScalar> mu_);

    static MomentDistribution zero(const PadicContext& ctx, int k, int M);
    // Moments (1, 0, 0, ...): the point mass at 0.
    static MomentDistribution dirac0(const PadicContext& ctx, int k, int M);

    long p() const { return mu.at(0).prime(); }
    int wcap() const { return mu.at(0).working_cap(); }
    int size() const { return static_cast<int>(mu.size()); }
    int nominal_precision(int i) const { return i <= k - 2 ? wcap() : M + k - 1 - i; }

    const PadicScalar& moment(int i) const { return mu.at(static_cast<size_t>(i)); }

    MomentDistribution operator+(const MomentDistribution& o) const;
    MomentDistribution operator-(const MomentDistribution& o) const;
    MomentDistribution negate() const;
    MomentDistribution times_scalar(const PadicScalar& s) const;
    MomentDistribution times_int(const mpz_class& n) const;

    // Reduce every moment to the nominal profile (fresh values and wire
    // formats use it; action outputs keep their honest precision).
    void clamp_profile();
};

// Weight-k right action of gamma in Sigma_0(p):
//   result moment n = a^{k-2-n} sum_{l<=n} sum_j C(k-2-n,j)(c/a)^j C(n,l) b^{n-l} d^l mu(z^{j+l}),
// the j-sum truncated where inputs end; the truncation error is divisible
// by p^{v(c) (M+k-1-n)}, which caps the reported precision of moment n.
MomentDistribution act(const MomentDistribution& mu, const IntMatrix2& gamma);

// Action of [[1, b], [0, p^s]] via the shifted-series formula:
//   result moment n = sum_{j<=n} p^{sj} mu(z^j) C(-j-1, n-j) (-b)^{n-j}.
// Exactly triangular: output n reads inputs 0..n only.
MomentDistribution act_beta(const MomentDistribution& mu, const mpz_class& b, int s);

// Sum of act_beta over b = 0..p-1.  Preserves integrality.
MomentDistribution u_p(const MomentDistribution& mu);

// Specialization to the degree-(k-2) polynomial: coefficient of X^j is
// (-1)^j C(k-2, j) mu(z^j).
std::vector<PadicScalar> rho_k(const MomentDistribution& mu);

// <sum mu_j X^j, sum f_j z^j> = sum_j (-1)^j mu_j f_j / C(k-2, j).
// Satisfies pairing(rho_k(mu), z^j) = mu(z^j) for j <= k-2.
PadicScalar pairing(const std::vector<PadicScalar>& poly_mu,
                    const std::vector<PadicScalar>& poly_f,
                    int k, const PadicContext& ctx);

// Largest M' <= M with moments 0..k-2 vanishing at their precision and
// moment k-2+j divisible by p^{M'-j+1} for j = 1..M'; nullopt when some
// low moment is visibly nonzero.
std::optional<int> fil_level(const MomentDistribution& mu);

// fil_level of mu / p^e for an integrally stored mu with prefactor p^{-e}.
std::optional<int> scaled_fil_level(const MomentDistribution& mu, int e);

// Solves x | (gamma_1 - 1) = nu by forward substitution of the triangular
// system a_n = sum_{l<n} C(n,l) x_l; divisions by n with p | n cost
// precision.  Requires nu's moment 0 to vanish at its precision.
MomentDistribution solve_gamma1(const MomentDistribution& nu);

// Multiplies by p^s and retags the depth to M+s (s may be negative down
// to -fil_level(mu)).
MomentDistribution scale_shift(const MomentDistribution& mu, int s);

} // namespace padiclf
