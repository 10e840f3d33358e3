#pragma once

#include "padiclf/lift.hpp"

namespace padiclf {

/**
 * Moment table of the measure attached to a lifted symbol, restricted to
 * the unit classes a mod p^n.  Stored values follow the symbol's
 * prefactor convention: true moment = p^{-prefactor_exponent} * stored.
 */
struct PadicMeasure {
    long p = 2;
    int k = 2;
    int d = 1;
    int n = 1;
    int J_max = 0;
    long prefactor_exponent = 0;
    mpq_class psi_scale = 1;
    std::vector<long> classes;                                  // ascending units mod p^n
    std::vector<std::vector<std::vector<PadicScalar>>> moments; // [class][j][component]
};

// Moment j over a + p^n Z_p is phi^n < Phi_inf |_k [[1,a],[0,p^n]] ((inf,0)), z^j >.
PadicMeasure class_moments(const OverconvergentSymbol& phi, int n, int J_max);

// Moment j of the unrestricted measure Phi_inf((inf,0)).
std::vector<PadicScalar> full_moment(const OverconvergentSymbol& phi, int j);

// Moment j over p Z_p: phi < Phi_inf |_k [[1,0],[0,p]] ((inf,0)), z^j >.
std::vector<PadicScalar> pzp_moment(const OverconvergentSymbol& phi, int j);

// (1 - p^j phi) applied to the full moment: the unit-restricted moment.
std::vector<PadicScalar> unit_moment(const OverconvergentSymbol& phi, int j);

// Power-series coefficients (unit-restricted by default).
std::vector<std::vector<PadicScalar>> cauchy_series(const OverconvergentSymbol& phi, int J_max,
                                                    bool unit_restricted = true);

// Sum over unit classes of omega(a)^i times the class moment of z^j;
// needs a measure built with n = 1.
std::vector<PadicScalar> twist_value(const PadicMeasure& measure, long i, int j);

// Partition additivity of the class tables between exponents n and n-1.
bool additivity_holds(const OverconvergentSymbol& phi, int n, int J_max);

struct EulerReport {
    bool identity_ok = false;
    mpq_class factor; // 1 - a_p p^{-(j+1)} + p^{k-1-2(j+1)}
};

// Checks (1 - p^{k-2-j} phi)(1 - p^{-j-1} phi^{-1}) = factor * Id exactly.
EulerReport euler_factor_check(const PhiSetup& setup, int j);

} // namespace padiclf
