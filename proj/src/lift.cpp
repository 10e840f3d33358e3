#include "padiclf/lift.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <random>
#include <thread>

namespace padiclf {

std::string to_string(LiftCase c) {
    switch (c) {
        case LiftCase::ordinary: return "ordinary";
        case LiftCase::supersingular: return "supersingular";
        case LiftCase::semistable: return "semistable";
    }
    return "?";
}

LiftCase pick_case(long p, int k, const mpq_class& a_p, long level) {
    if (level % p == 0) return LiftCase::semistable;
    if (a_p != 0 && 2 * ord_p(a_p, p) < k - 1) return LiftCase::ordinary;
    return LiftCase::supersingular;
}

PhiSetup make_setup(LiftCase kind, long p, int k, const mpq_class& a_p,
                    std::shared_ptr<const PadicContext> ctx) {
    PhiSetup s;
    s.kind = kind;
    s.p = p;
    s.k = k;
    s.a_p = a_p;
    s.ctx = ctx;
    switch (kind) {
        case LiftCase::ordinary: {
            s.d = 1;
            s.h = 1;
            s.alpha = ctx->unit_root_cached(a_p, k); // throws NoUnitRoot if unusable
            s.lambda = s.alpha.valuation();
            s.e_phi = s.lambda;
            // N = p^lambda / alpha, a unit.
            PadicScalar N = ctx->from_int(ctx->p_pow(static_cast<int>(s.lambda))) / s.alpha;
            s.phi_num = {{N}};
            s.step = {{N}};
            break;
        }
        case LiftCase::supersingular: {
            long va = (a_p == 0) ? (k - 1) : std::min<long>(k - 1, ord_p(a_p, p));
            if (va <= 0)
                throw CaseHypothesisViolated("supersingular setup needs p | a_p");
            s.d = 2;
            s.h = 2;
            s.lambda = 2 * (k - 1) - va;
            s.e_phi = k - 1;
            mpq_class pk1(PadicScalar::pow_p(p, k - 1));
            s.phi_rational = {{mpq_class(0), 1 / pk1}, {mpq_class(-1), a_p / pk1}};
            PadicScalar pk = ctx->from_int(PadicScalar::pow_p(p, k - 1));
            PadicScalar ap = ctx->from_rational(a_p);
            s.phi_num = {{ctx->from_long(0), ctx->one()}, {-pk, ap}};
            // step = p^lambda phi^2 = N^2 / p^{min(k-1, ord a_p)}
            std::vector<std::vector<PadicScalar>> N2(2, std::vector<PadicScalar>(2, ctx->zero(ctx->working_exponent())));
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    PadicScalar acc = ctx->zero(ctx->working_exponent());
                    for (int l = 0; l < 2; ++l) acc = acc + s.phi_num[i][l] * s.phi_num[l][j];
                    N2[i][j] = acc;
                }
            int shift = static_cast<int>(2 * s.e_phi - s.lambda);
            for (auto& row : N2)
                for (auto& x : row) x = x.shift_down(shift);
            s.step = N2;
            break;
        }
        case LiftCase::semistable: {
            if (a_p != 1 && a_p != -1)
                throw CaseHypothesisViolated("semistable setup needs a_p = +-1");
            s.d = 1;
            s.h = 1;
            s.lambda = 0;
            s.e_phi = 0;
            s.phi_rational = {{a_p}};
            PadicScalar N = ctx->from_rational(a_p);
            s.phi_num = {{N}};
            s.step = {{N}};
            break;
        }
    }
    if (s.lambda >= static_cast<long>(s.h) * (k - 1))
        throw CaseHypothesisViolated("slope loss lambda must stay below h(k-1)");
    return s;
}

LiftPlan plan_lift(LiftCase, long p, int k, int h, long lambda, int M_target) {
    if (M_target < 1) throw PreconditionError("target depth must be >= 1");
    long denom = static_cast<long>(h) * (k - 1) - lambda;
    if (denom <= 0) throw LedgerStall("lambda >= h(k-1): the iteration cannot converge");
    LiftPlan plan;
    plan.n_rounds = static_cast<int>((M_target + lambda + denom - 1) / denom) + 1;
    // Prefactor budget: the coordinate map divides by C(k-2, j) (worth
    // e_binom), the ordinary stabilization clears 1/alpha (one lambda),
    // each round charges lambda, and the post-hoc residual certification
    // applies phi once more.
    long e_binom = 0;
    for (int j = 0; j <= k - 2; ++j) {
        mpz_class c = binom_int(k - 2, static_cast<unsigned long>(j));
        long v = 0;
        while (mpz_divisible_ui_p(c.get_mpz_t(), static_cast<unsigned long>(p))) {
            mpz_divexact_ui(c.get_mpz_t(), c.get_mpz_t(), static_cast<unsigned long>(p));
            ++v;
        }
        e_binom = std::max(e_binom, v);
    }
    plan.e_total = e_binom + lambda * (plan.n_rounds + 2);
    plan.M_store = M_target + static_cast<int>(plan.e_total);
    plan.W = plan.M_store + k + 2;
    return plan;
}

namespace {

void run_parallel(int n, int threads, const std::function<void(int)>& f) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    int nt = std::min(threads, n);
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                f(i);
            }
        });
    for (auto& th : pool) th.join();
}

// Decomposition terms grouped by acting matrix: the action is linear, so
// one act() per distinct matrix on the pre-summed combination suffices.
struct TermGroup {
    IntMatrix2 gamma; // the acting matrix (inverse of the decomposition one)
    std::vector<std::pair<mpz_class, int>> sources; // (coefficient, generator)
};

struct SweepTable {
    long p;
    std::vector<std::vector<std::vector<TermGroup>>> groups; // [generator][b]
};

std::vector<TermGroup> group_terms(const DivisorDecomposition& dec, long p) {
    std::vector<TermGroup> out;
    for (const DecompTerm& term : dec.terms) {
        IntMatrix2 g = term.gamma.inverse();
        if (!g.in_sigma0(p)) throw NotInSigma0("decomposition matrix outside Sigma_0(p)");
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const TermGroup& tg) { return tg.gamma == g; });
        if (it == out.end()) {
            out.push_back(TermGroup{g, {}});
            it = out.end() - 1;
        }
        it->sources.push_back({term.coeff, term.gen});
    }
    return out;
}

SweepTable build_sweep_table(const SymbolSpacePresentation& pres, long p) {
    SweepTable tab;
    tab.p = p;
    int t = pres.generator_count();
    tab.groups.resize(static_cast<size_t>(t));
    for (int i = 0; i < t; ++i) {
        Divisor di = pres.generator_divisor(i);
        for (long b = 0; b < p; ++b) {
            IntMatrix2 beta(1, b, 0, p);
            tab.groups[static_cast<size_t>(i)].push_back(
                group_terms(pres.decompose(apply_matrix(beta, di)), p));
        }
    }
    return tab;
}

MomentDistribution eval_groups(const std::vector<TermGroup>& groups, const PhiSetup& setup,
                               const std::vector<std::vector<MomentDistribution>>& vals,
                               int c, int k, int M) {
    MomentDistribution ext = MomentDistribution::zero(*setup.ctx, k, M);
    for (const TermGroup& tg : groups) {
        MomentDistribution combo = MomentDistribution::zero(*setup.ctx, k, M);
        for (const auto& [coeff, gen] : tg.sources)
            combo = combo + vals[static_cast<size_t>(gen)][static_cast<size_t>(c)].times_int(coeff);
        ext = ext + act(combo, tg.gamma);
    }
    return ext;
}

std::vector<std::vector<MomentDistribution>> sweep_u_p(
    const SweepTable& tab, const PhiSetup& setup,
    const std::vector<std::vector<MomentDistribution>>& vals, int threads) {
    int t = static_cast<int>(vals.size());
    int d = setup.d;
    std::vector<std::vector<MomentDistribution>> out(static_cast<size_t>(t));
    run_parallel(t, threads, [&](int i) {
        std::vector<MomentDistribution> acc;
        for (int c = 0; c < d; ++c) {
            const MomentDistribution& shape = vals[static_cast<size_t>(i)][static_cast<size_t>(c)];
            MomentDistribution sum = MomentDistribution::zero(*setup.ctx, shape.k, shape.M);
            for (long b = 0; b < tab.p; ++b) {
                // Phi(beta_b . delta_i) through the equivariant extension, then |_k beta_b.
                MomentDistribution ext = eval_groups(
                    tab.groups[static_cast<size_t>(i)][static_cast<size_t>(b)], setup, vals, c,
                    shape.k, shape.M);
                sum = sum + act_beta(ext, b, 1);
            }
            acc.push_back(std::move(sum));
        }
        out[static_cast<size_t>(i)] = std::move(acc);
    });
    return out;
}

// Apply a d x d scalar matrix to every generator value (the D-factor).
std::vector<std::vector<MomentDistribution>> apply_dmatrix(
    const std::vector<std::vector<PadicScalar>>& m,
    const std::vector<std::vector<MomentDistribution>>& vals) {
    std::vector<std::vector<MomentDistribution>> out(vals.size());
    int d = static_cast<int>(m.size());
    for (size_t i = 0; i < vals.size(); ++i) {
        for (int r = 0; r < d; ++r) {
            MomentDistribution acc = vals[i][0].times_scalar(m[static_cast<size_t>(r)][0]);
            for (int c = 1; c < d; ++c)
                acc = acc + vals[i][static_cast<size_t>(c)].times_scalar(m[static_cast<size_t>(r)][static_cast<size_t>(c)]);
            out[i].push_back(std::move(acc));
        }
    }
    return out;
}

int min_scaled_fil(const std::vector<std::vector<MomentDistribution>>& vals, long e, int cap) {
    int lvl = cap;
    for (const auto& tuple : vals)
        for (const auto& m : tuple) {
            auto f = scaled_fil_level(m, static_cast<int>(e));
            if (!f) return -1;
            lvl = std::min(lvl, *f);
        }
    return lvl;
}

} // namespace

std::vector<std::vector<MomentDistribution>> u_p_sweep(const OverconvergentSymbol& state, int threads) {
    SweepTable tab = build_sweep_table(*state.pres, state.setup.p);
    return sweep_u_p(tab, state.setup, state.values, threads);
}

std::vector<MomentDistribution> evaluate_extension(const OverconvergentSymbol& state,
                                                   const Divisor& d) {
    const PhiSetup& setup = state.setup;
    std::vector<TermGroup> groups = group_terms(state.pres->decompose(d), setup.p);
    std::vector<MomentDistribution> out;
    for (int c = 0; c < setup.d; ++c)
        out.push_back(eval_groups(groups, setup, state.values, c, setup.k, state.M_store));
    return out;
}

// ---------------------------------------------------------------------------
// prepare_initial
// ---------------------------------------------------------------------------

OverconvergentSymbol prepare_initial(const ClassicalSymbol& classical, const PhiSetup& setup,
                                     std::shared_ptr<const SymbolSpacePresentation> pres0,
                                     const LiftPlan& plan, int M_target) {
    const int k = setup.k;
    const long p = setup.p;
    const PadicContext& ctx = *setup.ctx;
    const IntMatrix2 Vp(p, 0, 0, 1);

    if (classical.k != k) throw PreconditionError("weight mismatch");
    if (setup.kind == LiftCase::semistable) {
        long N = classical.pres->level();
        if (N % p != 0 || (N / p) % p == 0)
            throw PreconditionError("semistable case needs p to divide the level exactly once");
    }

    // Exact rational eigen identity (T_p or U_p) before any truncation.
    {
        ClassicalSymbol up = hecke(classical, p); // U_p when p | N, T_p otherwise
        for (int i = 0; i < classical.pres->generator_count(); ++i) {
            RatPoly r = poly_add(up.values[static_cast<size_t>(i)],
                                 poly_scale(classical.values[static_cast<size_t>(i)], -setup.a_p));
            if (!poly_is_zero(r)) throw InvariantViolation("Hecke eigen identity fails at p");
        }
    }

    int t0 = pres0->generator_count();

    // Per-generator rational ingredients: r1 = mu-coordinates of Psi(delta),
    // r2 = mu-coordinates of (Psi|V_p)(delta).
    std::vector<std::vector<mpq_class>> r1(static_cast<size_t>(t0)), r2(static_cast<size_t>(t0));
    bool need_r2 = setup.kind != LiftCase::semistable;
    for (int i = 0; i < t0; ++i) {
        Divisor di = pres0->generator_divisor(i);
        RatPoly P1 = classical.evaluate(di);
        RatPoly P2;
        if (need_r2) P2 = poly_act(classical.evaluate(apply_matrix(Vp, di)), Vp, k);
        for (int j = 0; j <= k - 2; ++j) {
            mpq_class bin(binom_int(k - 2, static_cast<unsigned long>(j)));
            mpq_class s1 = P1[static_cast<size_t>(j)] / bin;
            if (j % 2 == 1) s1 = -s1;
            r1[static_cast<size_t>(i)].push_back(s1);
            if (need_r2) {
                mpq_class s2 = P2[static_cast<size_t>(j)] / bin;
                if (j % 2 == 1) s2 = -s2;
                r2[static_cast<size_t>(i)].push_back(s2);
            }
        }
    }

    // Global exponent e so that every stored moment is p-integral.
    long clear = 0;
    auto track = [&](const mpq_class& q) {
        if (q == 0) return;
        clear = std::max(clear, -ord_p(q, p));
    };
    for (int i = 0; i < t0; ++i) {
        for (const auto& q : r1[static_cast<size_t>(i)]) track(q);
        if (need_r2)
            for (const auto& q : r2[static_cast<size_t>(i)]) track(q);
    }
    long e0 = clear + (setup.kind == LiftCase::ordinary ? setup.lambda : 0);

    OverconvergentSymbol state;
    state.pres = pres0;
    state.setup = setup;
    state.M_target = M_target;
    state.M_store = plan.M_store;
    state.prefactor_exponent = e0;
    state.rounds_done = 0;

    mpz_class pe = PadicScalar::pow_p(p, static_cast<int>(e0));
    mpz_class pel = PadicScalar::pow_p(p, static_cast<int>(e0 - setup.lambda));
    for (int i = 0; i < t0; ++i) {
        std::vector<MomentDistribution> tuple;
        std::vector<std::vector<PadicScalar>> lows;
        for (int c = 0; c < setup.d; ++c) {
            MomentDistribution m = MomentDistribution::zero(ctx, k, plan.M_store);
            std::vector<PadicScalar> low;
            for (int j = 0; j <= k - 2; ++j) {
                PadicScalar v = ctx.zero(ctx.working_exponent());
                switch (setup.kind) {
                    case LiftCase::semistable:
                        v = ctx.from_rational(mpq_class(pe) * r1[static_cast<size_t>(i)][static_cast<size_t>(j)]);
                        break;
                    case LiftCase::supersingular:
                        v = ctx.from_rational(mpq_class(pe) *
                                              (c == 0 ? r1 : r2)[static_cast<size_t>(i)][static_cast<size_t>(j)]);
                        break;
                    case LiftCase::ordinary: {
                        // p^{e0} (r1 - r2 / alpha) = p^{e0} r1 - (p^lambda/alpha) p^{e0-lambda} r2
                        PadicScalar a = ctx.from_rational(mpq_class(pe) * r1[static_cast<size_t>(i)][static_cast<size_t>(j)]);
                        PadicScalar b = ctx.from_rational(mpq_class(pel) * r2[static_cast<size_t>(i)][static_cast<size_t>(j)]);
                        v = a - setup.phi_num[0][0] * b;
                        break;
                    }
                }
                m.mu[static_cast<size_t>(j)] = v;
                low.push_back(v);
            }
            tuple.push_back(std::move(m));
            lows.push_back(std::move(low));
        }
        state.values.push_back(std::move(tuple));
        state.initial_low.push_back(std::move(lows));
    }
    return state;
}

void add_fil_noise(OverconvergentSymbol& state, int M_target, unsigned long seed) {
    std::mt19937_64 rng(seed);
    const PadicContext& ctx = *state.setup.ctx;
    long p = state.setup.p;
    int k = state.setup.k;
    for (auto& tuple : state.values)
        for (auto& m : tuple) {
            for (int j = 1; j <= m.M; ++j) {
                int idx = k - 2 + j;
                int prof = m.nominal_precision(idx);
                int val = std::max(M_target - j + 1, 0);
                if (val >= prof) continue;
                mpz_class r = static_cast<unsigned long>(rng() % 1000003);
                PadicScalar noise = ctx.from_int(r).times_int(PadicScalar::pow_p(p, val));
                m.mu[static_cast<size_t>(idx)] = (m.mu[static_cast<size_t>(idx)] + noise).at_precision(prof);
            }
        }
}

// ---------------------------------------------------------------------------
// The iteration
// ---------------------------------------------------------------------------

void lift_to(OverconvergentSymbol& state, int M_target, int threads) {
    const PhiSetup& setup = state.setup;
    LiftPlan plan = plan_lift(setup.kind, setup.p, setup.k, setup.h, setup.lambda, M_target);
    if (state.M_store < plan.M_store)
        throw PreconditionError("state was prepared with too shallow a moment window");

    SweepTable tab = build_sweep_table(*state.pres, setup.p);

    // p^lambda phi as an integral matrix, for the free per-round residual.
    std::vector<std::vector<PadicScalar>> single = setup.phi_num;
    {
        int extra = static_cast<int>(setup.lambda - setup.e_phi);
        if (extra < 0) throw InternalError("p^lambda phi is not integral");
        if (extra > 0) {
            mpz_class pe = PadicScalar::pow_p(setup.p, extra);
            for (auto& row : single)
                for (auto& x : row) x = x.times_int(pe);
        }
    }

    for (int round = state.rounds_done + 1; round <= plan.n_rounds; ++round) {
        std::vector<std::vector<MomentDistribution>> A = sweep_u_p(tab, setup, state.values, threads);

        // Free eigen-residual: (p^lambda phi) U_p(S) - p^lambda S at e + lambda.
        long e_next = state.prefactor_exponent + setup.lambda;
        std::vector<std::vector<MomentDistribution>> lhs = apply_dmatrix(single, A);
        int eigen_level;
        {
            mpz_class pl = PadicScalar::pow_p(setup.p, static_cast<int>(setup.lambda));
            std::vector<std::vector<MomentDistribution>> resid(lhs.size());
            for (size_t i = 0; i < lhs.size(); ++i)
                for (size_t c = 0; c < lhs[i].size(); ++c)
                    resid[i].push_back(lhs[i][c] - state.values[i][c].times_int(pl));
            eigen_level = min_scaled_fil(resid, e_next, state.M_store);
        }

        for (int step = 1; step < setup.h; ++step) A = sweep_u_p(tab, setup, A, threads);
        std::vector<std::vector<MomentDistribution>> next = apply_dmatrix(setup.step, A);

        int gap_level;
        {
            mpz_class pl = PadicScalar::pow_p(setup.p, static_cast<int>(setup.lambda));
            std::vector<std::vector<MomentDistribution>> gap(next.size());
            for (size_t i = 0; i < next.size(); ++i)
                for (size_t c = 0; c < next[i].size(); ++c)
                    gap[i].push_back(next[i][c] - state.values[i][c].times_int(pl));
            gap_level = min_scaled_fil(gap, e_next, state.M_store);
        }

        state.values = std::move(next);
        state.prefactor_exponent = e_next;
        state.rounds_done = round;

        LedgerEntry entry;
        entry.round = round;
        entry.t_bound = static_cast<long>(setup.h) * (setup.k - 1) * (round - 1) - setup.lambda * round;
        entry.gap_level = gap_level;
        entry.eigen_level = eigen_level;
        state.ledger.push_back(entry);

        long expect = std::min<long>(entry.t_bound, M_target);
        if (expect >= 0 && gap_level < expect)
            throw InvariantViolation("iteration gap fell below the convergence schedule");
    }

    if (state.ledger.empty() || state.ledger.back().gap_level < M_target)
        throw InvariantViolation("lift did not reach the target depth");
    state.M_achieved = std::min(state.ledger.back().gap_level,
                                std::max(state.ledger.back().eigen_level, 0));
    // The final eigen residual lags one round; certify it directly.
    VerifyReport rep = verify(state);
    state.M_achieved = std::min({state.ledger.back().gap_level, rep.eigen_level, rep.relation_level});
    if (state.M_achieved < M_target)
        throw InvariantViolation("final residuals fall below the target depth");
}

VerifyReport verify(const OverconvergentSymbol& state) {
    const PhiSetup& setup = state.setup;
    VerifyReport rep;

    // Eigen residual at the current iterate.
    std::vector<std::vector<MomentDistribution>> A = u_p_sweep(state);
    std::vector<std::vector<PadicScalar>> single = setup.phi_num;
    int extra = static_cast<int>(setup.lambda - setup.e_phi);
    if (extra > 0) {
        mpz_class pe = PadicScalar::pow_p(setup.p, extra);
        for (auto& row : single)
            for (auto& x : row) x = x.times_int(pe);
    }
    std::vector<std::vector<MomentDistribution>> lhs = apply_dmatrix(single, A);
    mpz_class pl = PadicScalar::pow_p(setup.p, static_cast<int>(setup.lambda));
    std::vector<std::vector<MomentDistribution>> resid(lhs.size());
    for (size_t i = 0; i < lhs.size(); ++i)
        for (size_t c = 0; c < lhs[i].size(); ++c)
            resid[i].push_back(lhs[i][c] - state.values[i][c].times_int(pl));
    rep.eigen_level = [&] {
        int lvl = state.M_store;
        for (const auto& tuple : resid)
            for (const auto& m : tuple) {
                auto f = scaled_fil_level(m, static_cast<int>(state.prefactor_exponent + setup.lambda));
                if (!f) return -1;
                lvl = std::min(lvl, *f);
            }
        return lvl;
    }();

    // Relation residuals.
    rep.relation_level = state.M_store;
    for (const auto& rel : state.pres->relations()) {
        for (int c = 0; c < setup.d; ++c) {
            MomentDistribution acc = MomentDistribution::zero(*setup.ctx, setup.k, state.M_store);
            for (const auto& [gamma, gi] : rel.terms)
                acc = acc + act(state.values[static_cast<size_t>(gi)][static_cast<size_t>(c)], gamma.inverse());
            auto f = scaled_fil_level(acc, static_cast<int>(state.prefactor_exponent));
            rep.relation_level = std::min(rep.relation_level, f ? *f : -1);
        }
    }

    // Anchoring: low moments never move.
    rep.anchoring_ok = true;
    for (size_t i = 0; i < state.values.size(); ++i)
        for (size_t c = 0; c < state.values[i].size(); ++c)
            for (int j = 0; j <= setup.k - 2; ++j) {
                PadicScalar now = state.values[i][c].moment(j);
                PadicScalar init = state.initial_low[i][c][static_cast<size_t>(j)];
                long de = setup.lambda * state.rounds_done;
                PadicScalar shifted = init.times_int(PadicScalar::pow_p(setup.p, static_cast<int>(de)));
                if (!now.congruent(shifted)) rep.anchoring_ok = false;
            }
    return rep;
}

} // namespace padiclf
