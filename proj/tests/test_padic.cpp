#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "padiclf/padic.hpp"

using namespace padiclf;

namespace {

// Digit-by-digit root search: the independent oracle for Hensel lifts.
mpz_class brute_root(long p, int W, const mpz_class& b, const mpz_class& c, long start) {
    mpz_class x = start;
    mpz_class mod = 1;
    for (int level = 1; level <= W; ++level) {
        mod = PadicScalar::pow_p(p, level);
        bool found = false;
        mpz_class base = x;
        for (long digit = 0; digit < p; ++digit) {
            mpz_class cand = base + digit * PadicScalar::pow_p(p, level - 1);
            mpz_class val = (cand * cand - b * cand + c) % mod;
            if (val == 0) {
                x = cand;
                found = true;
                break;
            }
        }
        REQUIRE(found);
    }
    return x;
}

} // namespace

TEST_CASE("addition picks up valuation, keeps absolute precision") {
    PadicContext ctx(3, 5);
    PadicScalar x = ctx.from_long(1), y = ctx.from_long(2);
    PadicScalar s = x + y;
    CHECK(s.valuation() == 1);
    CHECK(s.precision() == 5);
    CHECK(s.residue() == 3);
}

TEST_CASE("zero at finite precision absorbs multiplicatively") {
    PadicContext ctx(5, 9);
    PadicScalar z = ctx.zero(4);
    PadicScalar x = ctx.from_long(7);
    PadicScalar prod = z * x;
    CHECK(prod.is_zero());
    CHECK(prod.precision() == 4);
    CHECK(prod.valuation() == 4);
}

TEST_CASE("division by a unit: 7/3 mod 5^4") {
    PadicContext ctx(5, 4);
    PadicScalar q = ctx.from_long(7) / ctx.from_long(3);
    // extended-gcd oracle: 3^{-1} = 417 mod 625, 7 * 417 = 2919 = 419 mod 625
    CHECK(q.residue() == 419);
    CHECK((q * ctx.from_long(3)).residue() == 7);
}

TEST_CASE("division by a non-unit costs precision and checks integrality") {
    PadicContext ctx(3, 6);
    PadicScalar nine = ctx.from_long(9), three = ctx.from_long(3);
    PadicScalar q = nine / three;
    CHECK(q.residue() == 3);
    CHECK(q.precision() == 5);
    CHECK_THROWS_AS(ctx.from_long(1) / three, NonIntegralQuotient);
    CHECK_THROWS_AS(ctx.from_long(1) / ctx.zero(4), PrecisionExhausted);
}

TEST_CASE("rational embedding requires a p-unit denominator") {
    PadicContext ctx(5, 4);
    CHECK(ctx.from_rational(mpq_class(7, 3)).residue() == 419);
    CHECK_THROWS_AS(ctx.from_rational(mpq_class(1, 5)), NonIntegralQuotient);
}

TEST_CASE("ring laws hold on residues at the tracked precision") {
    PadicContext ctx(7, 6);
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 200; ++trial) {
        PadicScalar a = ctx.from_long(static_cast<long>(rng() % 100000));
        PadicScalar b = ctx.from_long(static_cast<long>(rng() % 100000));
        PadicScalar c = ctx.from_long(static_cast<long>(rng() % 100000));
        CHECK((a + b).congruent(b + a));
        CHECK((a * b).congruent(b * a));
        CHECK(((a + b) + c).congruent(a + (b + c)));
        CHECK((a * (b + c)).congruent(a * b + a * c));
    }
}

TEST_CASE("binomials with negative top index") {
    PadicContext ctx(5, 8);
    for (long n = 0; n < 9; ++n) {
        PadicScalar b = binom_neg(0, n, ctx); // C(-1, n) = (-1)^n
        mpz_class want = (n % 2 == 0) ? 1 : -1;
        CHECK(b.congruent(ctx.from_int(want)));
    }
    CHECK(binom_neg(2, 2, ctx).residue() == 6); // C(-3,2) = (-3)(-4)/2
    CHECK(binom_neg(3, 0, ctx).residue() == 1);

    // falling-factorial identity: C(-j-1,i) * i! = (-j-1)(-j-2)...(-j-i)
    for (long j = 0; j < 5; ++j)
        for (long i = 0; i < 6; ++i) {
            mpz_class fact, fall = 1;
            mpz_fac_ui(fact.get_mpz_t(), static_cast<unsigned long>(i));
            for (long s = 0; s < i; ++s) fall *= mpz_class(-j - 1 - s);
            CHECK(binom_neg(j, i, ctx).times_int(fact).congruent(ctx.from_int(fall)));
        }
}

TEST_CASE("unit root of the Hecke quadratic, p=3 k=2 a_p=-1") {
    PadicContext ctx(3, 8);
    PadicScalar alpha = quadratic_unit_root(mpq_class(-1), 2, ctx);
    CHECK(alpha.residue() % 3 == 2);
    CHECK(alpha.valuation() == 0);
    mpz_class oracle = brute_root(3, 8, -1, 3, alpha.residue().get_si() % 3);
    CHECK(alpha.residue() == oracle);
    // alpha^2 - a_p alpha + p^{k-1} = 0 and the two roots split k-1
    PadicScalar lhs = alpha * alpha + alpha + ctx.from_long(3);
    CHECK(lhs.is_zero());
    PadicScalar beta = ctx.from_long(-1) - alpha;
    CHECK(alpha.valuation() + beta.valuation() == 1);
}

TEST_CASE("unit root for p=5 k=2 a_p=1") {
    PadicContext ctx(5, 6);
    PadicScalar alpha = quadratic_unit_root(mpq_class(1), 2, ctx);
    CHECK(alpha.residue() % 5 == 1);
    mpz_class oracle = brute_root(5, 6, 1, 5, 1);
    CHECK(alpha.residue() == oracle);
}

TEST_CASE("no unit root when the slope is fractional") {
    PadicContext ctx(3, 6);
    CHECK_THROWS_AS(quadratic_unit_root(mpq_class(0), 2, ctx), NoUnitRoot);
    CHECK_THROWS_AS(quadratic_unit_root(mpq_class(3), 3, ctx), NoUnitRoot);
}

TEST_CASE("teichmuller lifts") {
    PadicContext ctx5(5, 4);
    PadicScalar w = teichmuller(mpz_class(2), ctx5);
    CHECK(w.residue() == 182); // iterate x <- x^5 to convergence mod 625
    PadicScalar w4 = w * w * w * w;
    CHECK(w4.congruent(ctx5.one()));
    CHECK(teichmuller(mpz_class(1), ctx5).residue() == 1);
    CHECK(teichmuller(mpz_class(6), ctx5).residue() == 1); // == 1 mod 5

    PadicContext ctx3(3, 7);
    PadicScalar m1 = teichmuller(mpz_class(2), ctx3);
    CHECK((m1 + ctx3.one()).is_zero()); // omega(2) = -1 for p = 3
}

TEST_CASE("serialization is the (residue, precision) pair") {
    PadicContext ctx(3, 5);
    auto [res, prec] = (ctx.from_long(10)).serialized();
    CHECK(res == "10");
    CHECK(prec == 5);
}
