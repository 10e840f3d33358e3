#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "padiclf/moments.hpp"

using namespace padiclf;

namespace {

const IntMatrix2 kG1(1, 1, 0, 1);

MomentDistribution random_integral(const PadicContext& ctx, int k, int M, std::mt19937_64& rng) {
    MomentDistribution m = MomentDistribution::zero(ctx, k, M);
    for (auto& x : m.mu) x = ctx.from_int(mpz_class(static_cast<unsigned long>(rng() % 1000003)));
    return m;
}

// A random element of Fil^M stored at depth L >= M, so the divisibilities
// the filtration asserts stay visible after actions.
MomentDistribution random_fil(const PadicContext& ctx, int k, int M, int L, std::mt19937_64& rng) {
    MomentDistribution m = MomentDistribution::zero(ctx, k, L);
    for (int j = 1; j <= L; ++j)
        m.mu[static_cast<size_t>(k - 2 + j)] =
            ctx.from_int(mpz_class(static_cast<unsigned long>(rng() % 1000003)))
                .times_int(PadicScalar::pow_p(ctx.p(), std::max(M - j + 1, 0)));
    return m;
}

// Independent oracle: expand (a+cz)^{k-2-n}(b+dz)^n by termwise binomial
// series, straight from the defining integral.
PadicScalar act_oracle_moment(const MomentDistribution& mu, const IntMatrix2& g, int n) {
    PadicContext ctx(mu.p(), mu.wcap());
    PadicScalar ca = ctx.from_int(g.c) / ctx.from_int(g.a);
    PadicScalar acc = ctx.zero(mu.wcap());
    for (int l = 0; l <= n; ++l) {
        for (int j = 0; j + l < mu.size(); ++j) {
            if (mu.k - 2 - n >= 0 && j > mu.k - 2 - n) break;
            mpz_class cb = binom_int(mu.k - 2 - n, static_cast<unsigned long>(j)) *
                           binom_int(n, static_cast<unsigned long>(l));
            mpz_class bpow, dpow;
            mpz_pow_ui(bpow.get_mpz_t(), g.b.get_mpz_t(), static_cast<unsigned long>(n - l));
            mpz_pow_ui(dpow.get_mpz_t(), g.d.get_mpz_t(), static_cast<unsigned long>(l));
            PadicScalar cap = ctx.one();
            for (int s = 0; s < j; ++s) cap = cap * ca;
            acc = acc + mu.moment(j + l).times_int(cb * bpow * dpow) * cap;
        }
    }
    int e = mu.k - 2 - n;
    PadicScalar ap = ctx.one();
    if (e >= 0)
        for (int s = 0; s < e; ++s) ap = ap.times_int(g.a);
    else
        for (int s = 0; s < -e; ++s) ap = ap * (ctx.one() / ctx.from_int(g.a));
    return acc * ap;
}

} // namespace

TEST_CASE("identity acts trivially") {
    PadicContext ctx(5, 8);
    std::mt19937_64 rng(7);
    MomentDistribution m = random_integral(ctx, 4, 5, rng);
    MomentDistribution r = act(m, IntMatrix2::identity());
    for (int i = 0; i < m.size(); ++i) CHECK(r.moment(i).congruent(m.moment(i)));
}

TEST_CASE("gamma_1 turns the point mass at 0 into all-ones moments") {
    PadicContext ctx(3, 9);
    MomentDistribution dirac = MomentDistribution::dirac0(ctx, 2, 6);
    MomentDistribution r = act(dirac, kG1);
    for (int i = 0; i < r.size(); ++i) {
        CHECK(r.moment(i).congruent(ctx.one().at_precision(r.moment(i).precision())));
        CHECK(r.moment(i).precision() > 0);
    }
}

TEST_CASE("k=3 lower-triangular example: moment 0 becomes mu_0 + p mu_1") {
    PadicContext ctx(5, 8);
    std::mt19937_64 rng(11);
    MomentDistribution m = random_integral(ctx, 3, 5, rng);
    IntMatrix2 g(1, 0, 5, 1);
    MomentDistribution r = act(m, g);
    PadicScalar want = m.moment(0) + m.moment(1).times_int(5);
    CHECK(r.moment(0).congruent(want.at_precision(r.moment(0).precision())));
}

TEST_CASE("act rejects matrices outside Sigma_0(p)") {
    PadicContext ctx(5, 6);
    MomentDistribution m = MomentDistribution::dirac0(ctx, 2, 4);
    CHECK_THROWS_AS(act(m, IntMatrix2(1, 0, 1, 1)), NotInSigma0); // p does not divide c
    CHECK_THROWS_AS(act(m, IntMatrix2(5, 0, 5, 1)), NotInSigma0); // p divides a
}

TEST_CASE("act agrees with the independent series oracle") {
    PadicContext ctx(3, 10);
    std::mt19937_64 rng(23);
    std::vector<IntMatrix2> mats = {IntMatrix2(1, 1, 3, 4), IntMatrix2(2, 1, 9, 5),
                                    IntMatrix2(-1, 2, 6, -13), IntMatrix2(4, -3, 12, -8)};
    for (int k : {2, 4}) {
        for (const auto& g : mats) {
            MomentDistribution m = random_integral(ctx, k, 6, rng);
            MomentDistribution r = act(m, g);
            for (int n = 0; n < m.size(); ++n) {
                PadicScalar want = act_oracle_moment(m, g, n).at_precision(r.moment(n).precision());
                CHECK(r.moment(n).congruent(want));
            }
        }
    }
}

TEST_CASE("beta action with b=0 rescales moments by p^n") {
    PadicContext ctx(5, 8);
    std::mt19937_64 rng(31);
    MomentDistribution m = random_integral(ctx, 2, 6, rng);
    MomentDistribution r = act_beta(m, 0, 1);
    for (int n = 0; n < m.size(); ++n)
        CHECK(r.moment(n).congruent(
            m.moment(n).times_int(PadicScalar::pow_p(5, n)).at_precision(r.moment(n).precision())));
}

TEST_CASE("U_p of the point mass at 0 for p=2: moments (2,1,1,...)") {
    PadicContext ctx(2, 9);
    MomentDistribution m = MomentDistribution::dirac0(ctx, 2, 6);
    MomentDistribution r = u_p(m);
    CHECK(r.moment(0).congruent(ctx.from_long(2).at_precision(r.moment(0).precision())));
    for (int n = 1; n < r.size(); ++n)
        CHECK(r.moment(n).congruent(ctx.one().at_precision(r.moment(n).precision())));
}

TEST_CASE("U_p preserves total mass p-fold for the point mass") {
    for (long p : {3L, 5L}) {
        PadicContext ctx(p, 8);
        MomentDistribution m = MomentDistribution::dirac0(ctx, 2, 5);
        MomentDistribution r = u_p(m);
        CHECK(r.moment(0).congruent(ctx.from_long(p).at_precision(r.moment(0).precision())));
    }
}

TEST_CASE("triangularity: output moment n ignores inputs above n") {
    PadicContext ctx(3, 9);
    std::mt19937_64 rng(41);
    MomentDistribution m = random_integral(ctx, 2, 6, rng);
    MomentDistribution m2 = m;
    m2.mu[4] = m2.mu[4] + ctx.one(); // perturb moment 4
    MomentDistribution a = act_beta(m, 1, 1), b = act_beta(m2, 1, 1);
    for (int n = 0; n < 4; ++n) CHECK(a.moment(n).congruent(b.moment(n)));
    MomentDistribution ua = u_p(m), ub = u_p(m2);
    for (int n = 0; n < 4; ++n) CHECK(ua.moment(n).congruent(ub.moment(n)));
}

TEST_CASE("kernel of rho_k gains a factor p^{k-1} under U_p") {
    PadicContext ctx(3, 12);
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        MomentDistribution m = random_integral(ctx, 4, 6, rng);
        for (int j = 0; j <= 2; ++j) m.mu[static_cast<size_t>(j)] = ctx.zero(ctx.working_exponent());
        MomentDistribution r = u_p(m);
        for (const auto& x : r.mu)
            CHECK(std::min(x.valuation(), x.precision()) >= std::min(3, x.precision()));
    }
}

TEST_CASE("specialization rho_k") {
    PadicContext ctx(5, 8);
    MomentDistribution ones = MomentDistribution::zero(ctx, 4, 4);
    for (auto& x : ones.mu) x = ctx.one();
    std::vector<PadicScalar> poly = rho_k(ones); // 1 - 2X + X^2
    CHECK(poly.size() == 3);
    CHECK(poly[0].congruent(ctx.one()));
    CHECK(poly[1].congruent(ctx.from_long(-2)));
    CHECK(poly[2].congruent(ctx.one()));

    MomentDistribution dirac = MomentDistribution::dirac0(ctx, 6, 3);
    std::vector<PadicScalar> pd = rho_k(dirac);
    CHECK(pd[0].congruent(ctx.one()));
    for (size_t i = 1; i < pd.size(); ++i) CHECK(pd[i].is_zero());

    MomentDistribution m2 = MomentDistribution::dirac0(ctx, 2, 4);
    CHECK(rho_k(m2).size() == 1);
}

TEST_CASE("pairing inverts rho_k on monomials") {
    PadicContext ctx(5, 8);
    std::mt19937_64 rng(53);
    MomentDistribution m = random_integral(ctx, 4, 4, rng);
    std::vector<PadicScalar> poly = rho_k(m);
    for (int j = 0; j <= 2; ++j) {
        std::vector<PadicScalar> zj(3, ctx.zero(8));
        zj[static_cast<size_t>(j)] = ctx.one();
        PadicScalar got = pairing(poly, zj, 4, ctx);
        CHECK(got.congruent(m.moment(j)));
    }
    // worked example: <1 - 2X + X^2, z> = -(-2)/C(2,1) = 1
    std::vector<PadicScalar> p1 = {ctx.one(), ctx.from_long(-2), ctx.one()};
    std::vector<PadicScalar> z1 = {ctx.zero(8), ctx.one(), ctx.zero(8)};
    CHECK(pairing(p1, z1, 4, ctx).congruent(ctx.one()));
    // <0, f> = 0
    std::vector<PadicScalar> zero3(3, ctx.zero(8));
    CHECK(pairing(zero3, z1, 4, ctx).is_zero());
}

TEST_CASE("filtration level readout") {
    PadicContext ctx(3, 10);
    MomentDistribution z = MomentDistribution::zero(ctx, 2, 5);
    CHECK(fil_level(z) == 5);

    MomentDistribution m = MomentDistribution::zero(ctx, 2, 5);
    m.mu[1] = ctx.from_int(PadicScalar::pow_p(3, 5)); // first nonzero at k-1, divisible by p^M
    CHECK(fil_level(m) == 5);

    CHECK(!fil_level(MomentDistribution::dirac0(ctx, 2, 5)).has_value());
}

TEST_CASE("scale_shift moves the filtration by s") {
    PadicContext ctx(3, 12);
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 30; ++trial) {
        MomentDistribution m = random_fil(ctx, 2, 4, 4, rng);
        auto base = fil_level(m);
        REQUIRE(base.has_value());
        REQUIRE(*base >= 4);
        MomentDistribution up1 = scale_shift(m, 1);
        CHECK(up1.M == 5);
        auto lifted = fil_level(up1);
        CHECK(lifted.has_value());
        CHECK(*lifted >= 5);
        MomentDistribution down = scale_shift(up1, -1);
        auto back = fil_level(down);
        CHECK(back.has_value());
        CHECK(*back >= 4);
    }
    MomentDistribution d = MomentDistribution::dirac0(ctx, 2, 4);
    CHECK_THROWS_AS(scale_shift(d, -1), NegativeShiftBelowFloor);
}

TEST_CASE("depth-raising bound: one beta step") {
    // act_beta on a depth-M integral element lands in p^{(k-1)-t} Fil^{M+t}.
    PadicContext ctx(3, 14);
    std::mt19937_64 rng(71);
    for (int k : {2, 4}) {
        for (int trial = 0; trial < 20; ++trial) {
            MomentDistribution m = random_fil(ctx, k, 4, 4 + k, rng);
            for (long b = 0; b < 3; ++b) {
                MomentDistribution r = act_beta(m, b, 1);
                for (int t = 0; t <= k - 1; ++t) {
                    int drop = (k - 1) - t;
                    auto lvl = scaled_fil_level(r, drop);
                    CHECK(lvl.has_value());
                    if (lvl) CHECK(*lvl >= 4 + t);
                }
            }
        }
    }
}

TEST_CASE("stability of the filtration under Gamma_0") {
    PadicContext ctx(3, 12);
    std::mt19937_64 rng(73);
    std::vector<IntMatrix2> mats = {IntMatrix2(1, 0, 3, 1), IntMatrix2(2, 1, 33, 17),
                                    IntMatrix2(-2, 1, 9, -5), IntMatrix2(5, 3, 33, 20)};
    for (const auto& g : mats) {
        REQUIRE(g.det() != 0);
        for (int trial = 0; trial < 25; ++trial) {
            MomentDistribution m = random_fil(ctx, 2, 5, 7, rng);
            auto lvl = fil_level(act(m, g));
            CHECK(lvl.has_value());
            if (lvl) CHECK(*lvl >= 5);
        }
    }
}

TEST_CASE("solve_gamma1 forward substitution") {
    PadicContext ctx(5, 10);
    // nu with Cauchy coefficients (0,1,0,0,...): x = (1, -1/2, 1/6, ...)
    MomentDistribution nu = MomentDistribution::zero(ctx, 2, 4);
    nu.mu[1] = ctx.one();
    MomentDistribution x = solve_gamma1(nu);
    CHECK(x.moment(0).congruent(ctx.one()));
    CHECK(x.moment(1).congruent(ctx.from_rational(mpq_class(-1, 2)).at_precision(x.moment(1).precision())));
    CHECK(x.moment(2).congruent(ctx.from_rational(mpq_class(1, 6)).at_precision(x.moment(2).precision())));

    MomentDistribution zero = MomentDistribution::zero(ctx, 2, 4);
    MomentDistribution xz = solve_gamma1(zero);
    for (const auto& v : xz.mu) CHECK(v.is_zero());

    CHECK_THROWS_AS(solve_gamma1(MomentDistribution::dirac0(ctx, 2, 5)), NonzeroConstantTerm);

    // division by n = p at the top index has no precision left once the
    // input sits at the nominal depth-5 profile
    std::mt19937_64 rng(67);
    MomentDistribution bad = random_integral(ctx, 2, 5, rng);
    bad.clamp_profile();
    MomentDistribution nub = act(bad, kG1) - bad; // top index M+k-2 = 5 = p
    CHECK_THROWS_AS(solve_gamma1(nub), PrecisionExhausted);
}

TEST_CASE("gamma_1 difference equation roundtrip") {
    for (long p : {5L, 7L}) {
        // top index M+k-2 must avoid a division by a multiple of p that
        // would land at precision zero
        int M = (p == 5) ? 6 : 8;
        PadicContext ctx(p, 12);
        std::mt19937_64 rng(static_cast<unsigned long>(80 + p));
        for (int trial = 0; trial < 100; ++trial) {
            MomentDistribution m = random_integral(ctx, 2, M, rng);
            MomentDistribution nu = act(m, kG1) - m;
            MomentDistribution x = solve_gamma1(nu);
            MomentDistribution back = act(x, kG1) - x;
            for (int i = 1; i + 1 < m.size(); ++i)
                CHECK(back.moment(i).congruent(nu.moment(i)));
            // and the solution reproduces the original moments where determined
            for (int i = 0; i + 1 < m.size(); ++i)
                CHECK(x.moment(i).congruent(m.moment(i)));
        }
    }
}

TEST_CASE("no gamma_1-fixed vector: the lowest index strictly rises") {
    PadicContext ctx(5, 10);
    std::mt19937_64 rng(97);
    for (int trial = 0; trial < 40; ++trial) {
        MomentDistribution m = random_integral(ctx, 2, 6, rng);
        int low = 0;
        while (low < m.size() && m.moment(low).is_zero()) ++low;
        if (low == m.size()) continue;
        MomentDistribution diff = act(m, kG1) - m;
        for (int i = 0; i <= low && i < diff.size(); ++i) CHECK(diff.moment(i).is_zero());
    }
}

TEST_CASE("rho_k intertwines act with the polynomial right action") {
    PadicContext ctx(3, 12);
    std::mt19937_64 rng(101);
    std::vector<IntMatrix2> mats = {IntMatrix2(1, 1, 3, 4), IntMatrix2(2, 1, 9, 5),
                                    IntMatrix2(-1, 2, 6, -13)};
    for (int k : {2, 4, 6}) {
        for (const auto& g : mats) {
            MomentDistribution m = random_integral(ctx, k, 5, rng);
            std::vector<PadicScalar> lhs = rho_k(act(m, g));
            // right action on the specialization, computed over exact integers
            std::vector<mpq_class> poly;
            for (const auto& c : rho_k(m)) poly.push_back(mpq_class(c.residue()));
            std::vector<mpq_class> img(static_cast<size_t>(k - 1), 0);
            for (size_t i = 0; i < poly.size(); ++i) {
                if (poly[i] == 0) continue;
                for (size_t r = 0; r <= i; ++r)
                    for (size_t s2 = 0; s2 + i <= static_cast<size_t>(k - 2); ++s2) {
                        mpz_class pc, pd, pa, pb;
                        mpz_pow_ui(pc.get_mpz_t(), mpz_class(-g.c).get_mpz_t(),
                                   static_cast<unsigned long>(i - r));
                        mpz_pow_ui(pd.get_mpz_t(), g.d.get_mpz_t(), static_cast<unsigned long>(r));
                        mpz_pow_ui(pa.get_mpz_t(), g.a.get_mpz_t(),
                                   static_cast<unsigned long>(k - 2 - i - s2));
                        mpz_pow_ui(pb.get_mpz_t(), mpz_class(-g.b).get_mpz_t(),
                                   static_cast<unsigned long>(s2));
                        img[r + s2] += poly[i] *
                                       mpq_class(binom_int(static_cast<long>(i),
                                                           static_cast<unsigned long>(r)) *
                                                 binom_int(static_cast<long>(k - 2 - i),
                                                           static_cast<unsigned long>(s2)) *
                                                 pc * pd * pa * pb);
                    }
            }
            for (size_t j = 0; j < lhs.size(); ++j) {
                PadicScalar want = ctx.from_rational(img[j]).at_precision(lhs[j].precision());
                CHECK(lhs[j].congruent(want));
            }
        }
    }
}
