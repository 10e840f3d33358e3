#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "padiclf/moments.hpp"
#include "padiclf/ratlin.hpp"

namespace padiclf {

// A cusp of the upper half plane: num/den in lowest terms, den >= 0,
// infinity stored as 1/0.
struct Cusp {
    mpz_class num, den;

    Cusp() : num(1), den(0) {}
    Cusp(mpz_class n, mpz_class d);
    static Cusp infinity() { return Cusp(); }
    bool is_infinity() const { return den == 0; }

    bool operator==(const Cusp& o) const { return num == o.num && den == o.den; }
    bool operator<(const Cusp& o) const;
};

Cusp mobius(const IntMatrix2& g, const Cusp& x);

// Degree-zero (or general) divisor on the cusps, exact integer coefficients.
using Divisor = std::map<Cusp, mpz_class>;

Divisor path_divisor(const Cusp& from, const Cusp& to); // [to] - [from]
Divisor matrix_path(const IntMatrix2& g);               // [g.0] - [g.inf]
void add_to(Divisor& d, const Divisor& other, const mpz_class& coeff);
Divisor apply_matrix(const IntMatrix2& g, const Divisor& d);
bool divisor_is_zero(const Divisor& d);
mpz_class divisor_degree(const Divisor& d);

enum class Torsion { none, two, three };

struct GeneratorInfo {
    Cusp from, to;      // the unimodular path; its divisor is [to] - [from]
    IntMatrix2 realize; // A with A(inf) = from, A(0) = to
    IntMatrix2 gamma;   // pairing matrix, or the torsion element
    int star = -1;      // involution partner (self for torsion)
    Torsion torsion = Torsion::none;
};

struct DecompTerm {
    mpz_class coeff;
    IntMatrix2 gamma;
    int gen = -1;
};

// Exact expression of a divisor as sum coeff * gamma . (generator path).
struct DivisorDecomposition {
    std::vector<DecompTerm> terms;
};

/**
 * Generator/relation description of the degree-zero divisor module for
 * Gamma_0(level), built from a connected union of Farey triangles whose
 * boundary edges are the generators.  a_1 is always the path (inf, 0),
 * glued to (-1, inf) by [[1,1],[0,1]].  Relations:
 *   sum_i a_i = 0,
 *   a_i + gamma_i . a_{i*} = 0          (boundary pairs),
 *   a_i + gamma_i . a_i = 0             (2-torsion),
 *   a_i + gamma_i . a_i + gamma_i^2 . a_i = 0   (3-torsion).
 * Every coset representative path has a recorded expression in the
 * generators, which drives the deterministic decompose().
 */
class SymbolSpacePresentation {
public:
    struct Relation {
        // sum over terms of gamma . (generator path) = 0 in the divisor module
        std::vector<std::pair<IntMatrix2, int>> terms;
    };

    static std::shared_ptr<const SymbolSpacePresentation> build(long level);

    long level() const { return level_; }
    int coset_count() const { return static_cast<int>(labels_.size()); }
    int generator_count() const { return static_cast<int>(gens_.size()); }
    const std::vector<GeneratorInfo>& generators() const { return gens_; }
    Divisor generator_divisor(int i) const;
    const std::vector<Relation>& relations() const { return relations_; }

    const std::vector<IntMatrix2>& coset_reps() const { return reps_; }

    // Index of the coset of g (by its bottom row mod level).
    int coset_of(const IntMatrix2& g) const;
    int label_index(long c, long d) const;
    std::pair<long, long> label(int idx) const { return labels_.at(static_cast<size_t>(idx)); }
    int label_action(int idx, const IntMatrix2& g) const;

    // rep path of coset xi as +-1 combinations of generator paths (exact).
    const std::vector<std::pair<int, int>>& coset_expression(int xi) const;

    DivisorDecomposition decompose(const Divisor& d) const;

    // Cusps: classes are gamma_1-orbits of cosets.
    int cusp_class_count() const { return static_cast<int>(cusp_reps_.size()); }
    const Cusp& cusp_class_rep(int i) const { return cusp_reps_.at(static_cast<size_t>(i)); }
    int cusp_width(int i) const { return cusp_widths_.at(static_cast<size_t>(i)); }
    const IntMatrix2& cusp_scaling(int i) const { return cusp_scalings_.at(static_cast<size_t>(i)); }
    // (class index, gamma in Gamma_0 with gamma . rep = x)
    std::pair<int, IntMatrix2> cusp_class_of(const Cusp& x) const;

    // Exhaustive exact check of all stated relations; throws on failure.
    void verify_relations() const;

private:
    SymbolSpacePresentation() = default;

    long level_ = 1;
    std::vector<std::pair<long, long>> labels_;
    std::map<std::pair<long, long>, int> label_index_;
    std::vector<IntMatrix2> reps_;
    std::vector<GeneratorInfo> gens_;
    std::vector<Relation> relations_;
    std::vector<std::vector<std::pair<int, int>>> coset_expr_; // (sign, gen)

    std::vector<int> cusp_orbit_of_coset_; // gamma_1-orbit id per coset
    std::vector<Cusp> cusp_reps_;
    std::vector<int> cusp_widths_;
    std::vector<IntMatrix2> cusp_scalings_;
    std::vector<int> cusp_base_coset_;

    void build_p1();
    void build_domain();
    void build_cusps();
    long canon_unit_scan(long c, long d, std::pair<long, long>& out) const;
};

// Polynomial of degree <= k-2 with rational coefficients (ascending).
using RatPoly = std::vector<mpq_class>;

// Right weight-k action compatible with the distribution action:
// (P || g)(X) = (a - bX)^{k-2} P((-c + dX)/(a - bX)).
RatPoly poly_act(const RatPoly& P, const IntMatrix2& g, int k);

RatPoly poly_add(const RatPoly& a, const RatPoly& b);
RatPoly poly_scale(const RatPoly& a, const mpq_class& s);
bool poly_is_zero(const RatPoly& a);

/**
 * A polynomial-valued modular symbol given by its generator values.
 */
struct ClassicalSymbol {
    std::shared_ptr<const SymbolSpacePresentation> pres;
    int k = 2;
    std::vector<RatPoly> values; // one per generator, each of size k-1

    RatPoly evaluate(const Divisor& d) const;
    // Largest coefficient denominators cleared, content 1.
    void normalize_integral(mpq_class* applied_scale = nullptr);
    std::vector<RatPoly> relation_residuals() const;
    bool relations_hold() const;

    std::string to_text() const;
};

// T_ell for ell prime to the level (sum over [[1,b],[0,ell]] plus
// [[ell,0],[0,1]]), U_ell when ell divides it.
ClassicalSymbol hecke(const ClassicalSymbol& s, long ell);

// Basis of the space of weight-k symbols on this presentation.
std::vector<ClassicalSymbol> symbol_space(std::shared_ptr<const SymbolSpacePresentation> pres, int k);

// Dimension computed from the raw coset presentation (one relation per
// sigma- and tau-orbit); used to cross-check the reduced presentation.
int full_space_dimension(const SymbolSpacePresentation& pres, int k);

// Basis of the boundary (Eisenstein) subspace inside symbol coordinates.
std::vector<ClassicalSymbol> boundary_symbols(std::shared_ptr<const SymbolSpacePresentation> pres, int k);

int cuspidal_dimension(std::shared_ptr<const SymbolSpacePresentation> pres, int k);

struct Eigensystem {
    std::map<long, mpz_class> ap; // T_ell (or U_ell) eigenvalue per prime
    int multiplicity = 0;         // dimension of the simultaneous eigenspace
    ClassicalSymbol symbol;       // integral-primitive representative
};

// Rational simultaneous Hecke eigensystems in the cuspidal part, found by
// recursive splitting over primes <= hecke_bound with the eigenvalue
// window |a| <= 2 ell^{(k-1)/2} (which excludes every boundary system).
std::vector<Eigensystem> cuspidal_eigensymbols(std::shared_ptr<const SymbolSpacePresentation> pres,
                                               int k, long hecke_bound);

} // namespace padiclf
