#pragma once

#include <iosfwd>
#include <string>

#include "padiclf/lfun.hpp"

namespace padiclf {

struct RunConfig {
    long N = 11;
    int k = 2;
    long p = 3;
    int M_target = 4;
    long hecke_bound = 13;
    std::string case_override = "auto"; // auto | ordinary | supersingular | semistable
    int eigen_index = 0;
    std::string out_path;
    std::string checkpoint_path;
    int class_exponent = 1;
    int jmax = 4;
    long twist_i = 0;
    int threads = 1;

    void validate() const;
};

struct SpaceReport {
    long level = 0;
    int generators = 0;
    int cosets = 0;
    int cusps = 0;
    int total_dim = 0;
    int cuspidal_dim = 0;
};

SpaceReport cmd_space(long N, int k);

struct EigenReport {
    std::shared_ptr<const SymbolSpacePresentation> pres;
    std::vector<Eigensystem> systems;
};

EigenReport cmd_eigen(long N, int k, long hecke_bound);

struct LiftResult {
    OverconvergentSymbol symbol;
    VerifyReport report;
};

// Eigenvalue of a Hecke-eigen symbol under T_ell / U_ell, verified exact.
mpq_class eigenvalue_of(const ClassicalSymbol& s, long ell);

LiftResult cmd_lift(const RunConfig& cfg);

// Builds the measure and enforces the additivity and two-route
// invariants; throws InvariantViolation when they fail.
PadicMeasure cmd_moments(const OverconvergentSymbol& sym, int n, int J_max);

std::string checkpoint_to_json(const OverconvergentSymbol& s);
OverconvergentSymbol checkpoint_from_json(const std::string& text);
std::string measure_to_json(const PadicMeasure& m);
std::string lift_report_to_json(const LiftResult& r);

// Pinned-seed property corpus; returns the number of failures.
int selftest(std::ostream& log, bool inject_binom_fault = false);

} // namespace padiclf
