#include "padiclf/lfun.hpp"

namespace padiclf {

namespace {

// Apply the d x d integral matrix p^{s e_phi} phi^s to a stored tuple and
// divide out the power again: the net effect of tensoring with phi^s.
std::vector<PadicScalar> apply_phi_power(const PhiSetup& setup, std::vector<PadicScalar> v, int s) {
    const PadicContext& ctx = *setup.ctx;
    for (int step = 0; step < s; ++step) {
        std::vector<PadicScalar> w(v.size(), ctx.zero(ctx.working_exponent()));
        for (size_t r = 0; r < v.size(); ++r) {
            PadicScalar acc = ctx.zero(ctx.working_exponent());
            for (size_t c = 0; c < v.size(); ++c) acc = acc + setup.phi_num[r][c] * v[c];
            w[r] = acc;
        }
        v = std::move(w);
    }
    int shift = static_cast<int>(setup.e_phi) * s;
    for (auto& x : v) x = x.shift_down(shift); // throws PrecisionExhausted when spent
    return v;
}

std::vector<PadicScalar> tuple_moment(const std::vector<MomentDistribution>& tuple, int j) {
    std::vector<PadicScalar> out;
    for (const auto& m : tuple) out.push_back(m.moment(j));
    return out;
}

} // namespace

namespace {
int moment_cap(const OverconvergentSymbol& phi) {
    // up to the certified depth when the symbol has been verified
    int M = phi.M_achieved > 0 ? phi.M_achieved : phi.M_store;
    return M + phi.setup.k - 2;
}
} // namespace

PadicMeasure class_moments(const OverconvergentSymbol& phi, int n, int J_max) {
    const PhiSetup& setup = phi.setup;
    if (n < 1) throw PreconditionError("class exponent must be >= 1");
    if (J_max < 0 || J_max > moment_cap(phi))
        throw PreconditionError("J_max exceeds the certified moment window");

    PadicMeasure meas;
    meas.p = setup.p;
    meas.k = setup.k;
    meas.d = setup.d;
    meas.n = n;
    meas.J_max = J_max;
    meas.prefactor_exponent = phi.prefactor_exponent;
    meas.psi_scale = phi.psi_scale;

    mpz_class pn = PadicScalar::pow_p(setup.p, n);
    for (mpz_class a = 1; a < pn; ++a) {
        if (mpz_divisible_ui_p(a.get_mpz_t(), static_cast<unsigned long>(setup.p))) continue;
        meas.classes.push_back(a.get_si());
        // (Phi |_k beta)((inf,0)) = Phi(beta (inf,0)) |_k beta with
        // beta (inf,0) the path from inf to a/p^n.
        std::vector<MomentDistribution> base =
            evaluate_extension(phi, path_divisor(Cusp::infinity(), Cusp(a, pn)));
        std::vector<MomentDistribution> acted;
        for (const auto& m : base) acted.push_back(act_beta(m, a, n));
        std::vector<std::vector<PadicScalar>> rows;
        for (int j = 0; j <= J_max; ++j)
            rows.push_back(apply_phi_power(setup, tuple_moment(acted, j), n));
        meas.moments.push_back(std::move(rows));
    }
    return meas;
}

std::vector<PadicScalar> full_moment(const OverconvergentSymbol& phi, int j) {
    return tuple_moment(phi.value_at_infzero(), j);
}

std::vector<PadicScalar> pzp_moment(const OverconvergentSymbol& phi, int j) {
    const PhiSetup& setup = phi.setup;
    std::vector<MomentDistribution> acted;
    for (const auto& m : phi.value_at_infzero()) acted.push_back(act_beta(m, 0, 1));
    return apply_phi_power(setup, tuple_moment(acted, j), 1);
}

std::vector<PadicScalar> unit_moment(const OverconvergentSymbol& phi, int j) {
    const PhiSetup& setup = phi.setup;
    const PadicContext& ctx = *setup.ctx;
    if (j < 0 || j > moment_cap(phi))
        throw PreconditionError("moment index exceeds the certified window");
    std::vector<PadicScalar> m = full_moment(phi, j);
    // (1 - p^j phi) m = (p^{e_phi} m - p^j N m) / p^{e_phi}
    std::vector<PadicScalar> Nm(m.size(), ctx.zero(ctx.working_exponent()));
    for (size_t r = 0; r < m.size(); ++r) {
        PadicScalar acc = ctx.zero(ctx.working_exponent());
        for (size_t c = 0; c < m.size(); ++c) acc = acc + setup.phi_num[r][c] * m[c];
        Nm[r] = acc;
    }
    mpz_class pe = PadicScalar::pow_p(setup.p, static_cast<int>(setup.e_phi));
    mpz_class pj = PadicScalar::pow_p(setup.p, j);
    std::vector<PadicScalar> out;
    for (size_t r = 0; r < m.size(); ++r)
        out.push_back((m[r].times_int(pe) - Nm[r].times_int(pj)).shift_down(static_cast<int>(setup.e_phi)));
    return out;
}

std::vector<std::vector<PadicScalar>> cauchy_series(const OverconvergentSymbol& phi, int J_max,
                                                    bool unit_restricted) {
    if (J_max < 0 || J_max > moment_cap(phi))
        throw PreconditionError("J_max exceeds the certified moment window");
    std::vector<std::vector<PadicScalar>> out;
    for (int j = 0; j <= J_max; ++j)
        out.push_back(unit_restricted ? unit_moment(phi, j) : full_moment(phi, j));
    return out;
}

std::vector<PadicScalar> twist_value(const PadicMeasure& measure, long i, int j) {
    if (measure.n != 1) throw PreconditionError("tame twists need a measure with n = 1");
    if (j < 0 || j > measure.J_max) throw PreconditionError("twist moment outside the table");
    PadicContext ctx(measure.p, measure.moments.at(0).at(0).at(0).working_cap());
    std::vector<PadicScalar> acc(static_cast<size_t>(measure.d), ctx.zero(ctx.working_exponent()));
    for (size_t idx = 0; idx < measure.classes.size(); ++idx) {
        long a = measure.classes[idx];
        PadicScalar chi = teichmuller(mpz_class(a), ctx);
        PadicScalar chi_i = ctx.one();
        long e = ((i % (measure.p - 1)) + (measure.p - 1)) % (measure.p - 1);
        for (long s = 0; s < e; ++s) chi_i = chi_i * chi;
        for (int c = 0; c < measure.d; ++c)
            acc[static_cast<size_t>(c)] =
                acc[static_cast<size_t>(c)] + chi_i * measure.moments[idx][static_cast<size_t>(j)][static_cast<size_t>(c)];
    }
    return acc;
}

bool additivity_holds(const OverconvergentSymbol& phi, int n, int J_max) {
    if (n < 2) throw PreconditionError("additivity needs n >= 2");
    PadicMeasure fine = class_moments(phi, n, J_max);
    PadicMeasure coarse = class_moments(phi, n - 1, J_max);
    mpz_class pn1 = PadicScalar::pow_p(phi.setup.p, n - 1);
    for (size_t ci = 0; ci < coarse.classes.size(); ++ci) {
        long a = coarse.classes[ci];
        for (int j = 0; j <= J_max; ++j) {
            for (int c = 0; c < phi.setup.d; ++c) {
                PadicScalar sum = phi.setup.ctx->zero(phi.setup.ctx->working_exponent());
                for (size_t fi = 0; fi < fine.classes.size(); ++fi) {
                    if ((fine.classes[fi] - a) % pn1 != 0) continue;
                    sum = sum + fine.moments[fi][static_cast<size_t>(j)][static_cast<size_t>(c)];
                }
                if (!sum.congruent(coarse.moments[ci][static_cast<size_t>(j)][static_cast<size_t>(c)]))
                    return false;
            }
        }
    }
    return true;
}

EulerReport euler_factor_check(const PhiSetup& setup, int j) {
    if (setup.kind == LiftCase::semistable)
        throw PreconditionError("Euler factor identity needs an ordinary or supersingular setup");
    if (j < 0 || j > setup.k - 2) throw PreconditionError("need 0 <= j <= k-2");

    EulerReport rep;
    mpq_class pj1(PadicScalar::pow_p(setup.p, j + 1));
    mpq_class factor = 1 - setup.a_p / pj1;
    long e = setup.k - 1 - 2 * (j + 1);
    if (e >= 0)
        factor += mpq_class(PadicScalar::pow_p(setup.p, static_cast<int>(e)));
    else
        factor += 1 / mpq_class(PadicScalar::pow_p(setup.p, static_cast<int>(-e)));
    rep.factor = factor;

    if (setup.kind == LiftCase::supersingular) {
        // Exact rational matrix identity.
        const QMat& phi = setup.phi_rational;
        QMat phi_inv = {{setup.a_p, mpq_class(-1)},
                        {mpq_class(PadicScalar::pow_p(setup.p, setup.k - 1)), mpq_class(0)}};
        mpq_class A(PadicScalar::pow_p(setup.p, setup.k - 2 - j));
        mpq_class B = 1 / pj1;
        QMat lhs1 = q_identity(2), lhs2 = q_identity(2);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                lhs1[r][c] -= A * phi[r][c];
                lhs2[r][c] -= B * phi_inv[r][c];
            }
        QMat lhs = q_mul(lhs1, lhs2);
        rep.identity_ok = true;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                mpq_class want = (r == c) ? factor : mpq_class(0);
                if (lhs[r][c] != want) rep.identity_ok = false;
            }
    } else {
        // Ordinary: the identity is equivalent to alpha^2 - a_p alpha + p^{k-1} = 0,
        // scaled integral; verify it at the full working precision.
        const PadicContext& ctx = *setup.ctx;
        PadicScalar lhs = setup.alpha * setup.alpha - ctx.from_rational(setup.a_p) * setup.alpha +
                          ctx.from_int(PadicScalar::pow_p(setup.p, setup.k - 1));
        rep.identity_ok = lhs.is_zero();
    }
    return rep;
}

} // namespace padiclf
