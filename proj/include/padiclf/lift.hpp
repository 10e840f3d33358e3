#pragma once

#include <memory>
#include <optional>
#include <string>

#include "padiclf/manin.hpp"

namespace padiclf {

enum class LiftCase { ordinary, supersingular, semistable };

std::string to_string(LiftCase c);

/**
 * Eigen-setup for the lift: the auxiliary space D of dimension d with its
 * automorphism phi = p^{-e_phi} N (N integral), the block length h and the
 * slope loss lambda per h steps.  The convergence hypothesis is
 * lambda < h(k-1).
 *
 *   ordinary      d=1, h=1, phi = 1/alpha,                lambda = ord(alpha)
 *   supersingular d=2, h=2, phi = [[0,p^{1-k}],[-1,p^{1-k}a_p]],
 *                  lambda = 2k-2 - min(k-1, ord_p(a_p))
 *   semistable    d=1, h=1, phi = a_p in {+1,-1},         lambda = 0
 */
struct PhiSetup {
    LiftCase kind = LiftCase::semistable;
    long p = 2;
    int k = 2;
    mpq_class a_p;
    int d = 1;
    int h = 1;
    long lambda = 0;
    long e_phi = 0; // phi = p^{-e_phi} * N with N integral

    QMat phi_rational;     // exact phi (supersingular / semistable); empty for ordinary
    PadicScalar alpha;     // ordinary unit-slope root
    std::shared_ptr<const PadicContext> ctx;
    std::vector<std::vector<PadicScalar>> phi_num; // N mod p^W
    std::vector<std::vector<PadicScalar>> step;    // p^lambda phi^h (integral)
};

LiftCase pick_case(long p, int k, const mpq_class& a_p, long level);

PhiSetup make_setup(LiftCase kind, long p, int k, const mpq_class& a_p,
                    std::shared_ptr<const PadicContext> ctx);

struct LiftPlan {
    int n_rounds = 0; // ceil((M_target + lambda)/(h(k-1) - lambda)) + 1
    int M_store = 0;  // M_target plus the full prefactor budget
    int W = 0;        // M_store + k + 2
    long e_total = 0; // binomial losses of the coordinate map, the per-round
                      // slope charge, the stabilization and the final check
};

LiftPlan plan_lift(LiftCase kind, long p, int k, int h, long lambda, int M_target);

struct LedgerEntry {
    int round = 0;
    long t_bound = 0;    // h(k-1)n - lambda(n+1)
    int gap_level = 0;   // filtration gap between consecutive iterates
    int eigen_level = 0; // filtration level of (U_p (x) phi) Phi - Phi
};

/**
 * Distribution-valued symbol given by generator values (d components
 * each), stored integrally: the true value is p^{-prefactor_exponent}
 * times the stored one, and psi_scale records the rational normalization
 * applied to the classical eigensymbol.
 */
struct OverconvergentSymbol {
    std::shared_ptr<const SymbolSpacePresentation> pres;
    PhiSetup setup;
    int M_target = 0;
    int M_store = 0;
    int M_achieved = 0;
    long prefactor_exponent = 0;
    mpq_class psi_scale = 1;
    int rounds_done = 0;
    std::vector<std::vector<MomentDistribution>> values; // [generator][component]
    // Low moments of the initial lift, kept for the anchoring check.
    std::vector<std::vector<std::vector<PadicScalar>>> initial_low;
    std::vector<LedgerEntry> ledger;

    const std::vector<MomentDistribution>& value_at_infzero() const { return values.at(0); }
};

// Builds the round-0 state: p-stabilizes the classical eigensymbol per
// the case, converts polynomial values to low moments through the
// rho_k-coordinate map, zero-pads the higher moments, and verifies the
// (U_p (x) phi)-eigen identity by exact rational arithmetic.
OverconvergentSymbol prepare_initial(const ClassicalSymbol& classical, const PhiSetup& setup,
                                     std::shared_ptr<const SymbolSpacePresentation> pres0,
                                     const LiftPlan& plan, int M_target);

// Adds an element of Fil^{M_target} (x) L to every generator value; used
// to exercise independence of the lift from the zero-padding choice.
void add_fil_noise(OverconvergentSymbol& state, int M_target, unsigned long seed);

// Runs the U_p^h (x) phi^h iteration until the inter-iterate gap certifies
// M_target, recording the ledger; throws if the schedule stalls.
void lift_to(OverconvergentSymbol& state, int M_target, int threads = 1);

struct VerifyReport {
    int relation_level = 0; // worst filtration level of a relation residual
    int eigen_level = 0;
    bool anchoring_ok = false;
    int min_level() const { return std::min(relation_level, eigen_level); }
};

VerifyReport verify(const OverconvergentSymbol& phi_inf);

// One U_p sweep of the stored values through the deterministic
// decomposition (the equivariant extension); exposed for verification.
std::vector<std::vector<MomentDistribution>> u_p_sweep(const OverconvergentSymbol& state,
                                                       int threads = 1);

// Value of the stored symbol at a degree-zero divisor, through the
// deterministic decomposition.
std::vector<MomentDistribution> evaluate_extension(const OverconvergentSymbol& state,
                                                   const Divisor& d);

} // namespace padiclf
