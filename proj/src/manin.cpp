#include "padiclf/manin.hpp"

#include <algorithm>
#include <functional>
#include <list>
#include <numeric>
#include <sstream>

namespace padiclf {

namespace {

const IntMatrix2 kSigma(0, -1, 1, 0);
const IntMatrix2 kTau(0, -1, 1, -1);
const IntMatrix2 kRho(-1, -1, 1, 0);       // sigma tau sigma^{-1}
const IntMatrix2 kGamma1(1, 1, 0, 1);
const IntMatrix2 kGamma1Inv(1, -1, 0, 1);

long lmod(const mpz_class& x, long m) {
    mpz_class r;
    mpz_mod_ui(r.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(m));
    return r.get_si();
}

IntMatrix2 canon_sign(IntMatrix2 g) {
    if (g.c < 0 || (g.c == 0 && g.a < 0)) return IntMatrix2(-g.a, -g.b, -g.c, -g.d);
    return g;
}

} // namespace

Cusp::Cusp(mpz_class n, mpz_class d) : num(std::move(n)), den(std::move(d)) {
    if (den == 0) {
        num = 1;
        return;
    }
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (g != 0) {
        mpz_divexact(num.get_mpz_t(), num.get_mpz_t(), g.get_mpz_t());
        mpz_divexact(den.get_mpz_t(), den.get_mpz_t(), g.get_mpz_t());
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
}

bool Cusp::operator<(const Cusp& o) const {
    if (den != o.den) return den < o.den;
    return num < o.num;
}

Cusp mobius(const IntMatrix2& g, const Cusp& x) {
    return Cusp(g.a * x.num + g.b * x.den, g.c * x.num + g.d * x.den);
}

Divisor path_divisor(const Cusp& from, const Cusp& to) {
    Divisor d;
    d[to] += 1;
    d[from] -= 1;
    if (d[to] == 0) d.clear();
    return d;
}

Divisor matrix_path(const IntMatrix2& g) {
    return path_divisor(Cusp(g.a, g.c), Cusp(g.b, g.d));
}

void add_to(Divisor& d, const Divisor& other, const mpz_class& coeff) {
    if (coeff == 0) return;
    for (const auto& [c, m] : other) {
        d[c] += m * coeff;
        if (d[c] == 0) d.erase(c);
    }
}

Divisor apply_matrix(const IntMatrix2& g, const Divisor& d) {
    Divisor out;
    for (const auto& [c, m] : d) {
        Cusp gc = mobius(g, c);
        out[gc] += m;
        if (out[gc] == 0) out.erase(gc);
    }
    return out;
}

bool divisor_is_zero(const Divisor& d) {
    for (const auto& [c, m] : d)
        if (m != 0) return false;
    return true;
}

mpz_class divisor_degree(const Divisor& d) {
    mpz_class s = 0;
    for (const auto& [c, m] : d) s += m;
    return s;
}

// ---------------------------------------------------------------------------
// P^1(Z/M) and the presentation
// ---------------------------------------------------------------------------

long SymbolSpacePresentation::canon_unit_scan(long c, long d, std::pair<long, long>& out) const {
    long M = level_;
    c = ((c % M) + M) % M;
    d = ((d % M) + M) % M;
    std::pair<long, long> best(M, M);
    for (long u = 1; u < M; ++u) {
        if (std::gcd(u, M) != 1) continue;
        std::pair<long, long> cand((u * c) % M, (u * d) % M);
        if (cand < best) best = cand;
    }
    if (M == 1) best = {0, 0};
    out = best;
    return 0;
}

void SymbolSpacePresentation::build_p1() {
    long M = level_;
    if (M == 1) {
        labels_ = {{0, 0}};
        label_index_[{0, 0}] = 0;
        return;
    }
    for (long c = 0; c < M; ++c)
        for (long d = 0; d < M; ++d) {
            if (std::gcd(std::gcd(c, M), d) != 1) continue;
            std::pair<long, long> canon;
            canon_unit_scan(c, d, canon);
            if (canon == std::make_pair(c, d)) {
                label_index_[canon] = static_cast<int>(labels_.size());
                labels_.push_back(canon);
            }
        }
}

int SymbolSpacePresentation::label_index(long c, long d) const {
    std::pair<long, long> canon;
    canon_unit_scan(c, d, canon);
    auto it = label_index_.find(canon);
    if (it == label_index_.end()) throw InternalError("label not in P^1");
    return it->second;
}

int SymbolSpacePresentation::coset_of(const IntMatrix2& g) const {
    return label_index(lmod(g.c, level_), lmod(g.d, level_));
}

int SymbolSpacePresentation::label_action(int idx, const IntMatrix2& g) const {
    auto [c, d] = labels_.at(static_cast<size_t>(idx));
    mpz_class nc = c * g.a + d * g.c;
    mpz_class nd = c * g.b + d * g.d;
    return label_index(lmod(nc, level_), lmod(nd, level_));
}

namespace {
struct Item {
    int coset = -1;
    IntMatrix2 A;
    int child1 = -1, child2 = -1; // expression tree (attached-across items)
    int gen = -1;                 // final generator index
    bool torsion3 = false;
    IntMatrix2 torsion_gamma;
};
} // namespace

void SymbolSpacePresentation::build_domain() {
    long M = level_;

    if (M == 1) {
        // Single coset; the Farey triangle (inf, 0, -1) folded onto itself.
        reps_ = {IntMatrix2::identity()};
        IntMatrix2 A2(0, 1, -1, -1);  // path (0, -1)
        IntMatrix2 A3(-1, -1, 1, 0);  // path (-1, inf)
        GeneratorInfo g1{Cusp(1, 0), Cusp(0, 1), IntMatrix2::identity(), kGamma1, 2, Torsion::none};
        IntMatrix2 gam2 = canon_sign(A2 * kSigma * A2.inverse());
        GeneratorInfo g2{Cusp(0, 1), Cusp(-1, 1), A2, gam2, 1, Torsion::two};
        GeneratorInfo g3{Cusp(-1, 1), Cusp(1, 0), A3, A3, 0, Torsion::three};
        gens_ = {g1, g2, g3};
        coset_expr_ = {{{1, 0}}};
        return;
    }

    int n = coset_count();
    // rho-orbits are the triangles of the tessellation (in the chosen
    // clockwise realization).
    std::vector<int> orbit_of(static_cast<size_t>(n), -1);
    std::vector<char> orbit_fixed;
    int norb = 0;
    for (int i = 0; i < n; ++i) {
        if (orbit_of[static_cast<size_t>(i)] >= 0) continue;
        int j = label_action(i, kRho);
        int k2 = label_action(j, kRho);
        orbit_of[static_cast<size_t>(i)] = norb;
        bool fixed = (j == i);
        if (!fixed) {
            orbit_of[static_cast<size_t>(j)] = norb;
            orbit_of[static_cast<size_t>(k2)] = norb;
        }
        orbit_fixed.push_back(fixed ? 1 : 0);
        ++norb;
    }

    std::vector<Item> items;
    std::list<int> boundary;
    std::vector<char> placed(static_cast<size_t>(norb), 0);
    reps_.assign(static_cast<size_t>(n), IntMatrix2::identity());
    // per-coset expression hook: (sign, item id)
    std::vector<std::pair<int, int>> coset_link(static_cast<size_t>(n), {0, -1});

    auto push_item = [&](const IntMatrix2& A) {
        Item it;
        it.coset = coset_of(A);
        it.A = A;
        items.push_back(it);
        return static_cast<int>(items.size()) - 1;
    };

    // Root triangle: gamma_1^{-1} . (inf, 0, 1), realized clockwise so that
    // the boundary is the cusp chain inf -> 0 -> -1 -> inf.
    IntMatrix2 h = kGamma1Inv;
    IntMatrix2 A_first = h * kTau * kTau * kSigma; // = identity
    if (!(A_first == IntMatrix2::identity())) throw InternalError("root normalization broke");
    int i0 = push_item(A_first);
    int i1 = push_item(h * kTau * kSigma);
    int i2 = push_item(h * kSigma);
    boundary = {i0, i1, i2};
    for (int id : {i0, i1, i2}) {
        reps_[static_cast<size_t>(items[static_cast<size_t>(id)].coset)] = items[static_cast<size_t>(id)].A;
        coset_link[static_cast<size_t>(items[static_cast<size_t>(id)].coset)] = {1, id};
        placed[static_cast<size_t>(orbit_of[static_cast<size_t>(items[static_cast<size_t>(id)].coset)])] = 1;
    }

    bool progress = true;
    while (progress) {
        progress = false;
        for (auto it = boundary.begin(); it != boundary.end(); ++it) {
            Item& cur = items[static_cast<size_t>(*it)];
            if (cur.torsion3) continue;
            IntMatrix2 B = cur.A * kSigma;
            int xs = coset_of(B);
            int orb = orbit_of[static_cast<size_t>(xs)];
            if (placed[static_cast<size_t>(orb)]) continue;
            placed[static_cast<size_t>(orb)] = 1;
            progress = true;
            if (orbit_fixed[static_cast<size_t>(orb)]) {
                // Elliptic neighbor: keep the edge, record the 3-torsion.
                cur.torsion3 = true;
                cur.torsion_gamma = canon_sign(cur.A * kTau * cur.A.inverse());
                if (!cur.torsion_gamma.in_gamma0(M))
                    throw InternalError("3-torsion pairing left Gamma_0");
                reps_[static_cast<size_t>(xs)] = B;
                coset_link[static_cast<size_t>(xs)] = {-1, *it};
                continue;
            }
            // Attach the neighboring triangle across this edge.
            int id1 = push_item(B * kRho * kRho);
            int id2 = push_item(B * kRho);
            Item& cur2 = items[static_cast<size_t>(*it)]; // re-fetch (push_item may move)
            cur2.child1 = id1;
            cur2.child2 = id2;
            for (int nid : {id1, id2}) {
                const Item& ni = items[static_cast<size_t>(nid)];
                reps_[static_cast<size_t>(ni.coset)] = ni.A;
                coset_link[static_cast<size_t>(ni.coset)] = {1, nid};
            }
            reps_[static_cast<size_t>(xs)] = B;
            coset_link[static_cast<size_t>(xs)] = {-1, *it};
            auto pos = it;
            boundary.insert(pos, id1);
            boundary.insert(pos, id2);
            boundary.erase(pos);
            break; // restart the scan
        }
    }
    for (int orb = 0; orb < norb; ++orb)
        if (!placed[static_cast<size_t>(orb)])
            throw InternalError("fundamental domain did not reach every triangle");

    // Boundary items in order become the generators.
    std::vector<int> order(boundary.begin(), boundary.end());
    for (size_t gi = 0; gi < order.size(); ++gi)
        items[static_cast<size_t>(order[gi])].gen = static_cast<int>(gi);
    gens_.resize(order.size());
    for (size_t gi = 0; gi < order.size(); ++gi) {
        const Item& it = items[static_cast<size_t>(order[gi])];
        GeneratorInfo info;
        info.from = Cusp(it.A.a, it.A.c);
        info.to = Cusp(it.A.b, it.A.d);
        info.realize = it.A;
        if (it.torsion3) {
            info.torsion = Torsion::three;
            info.gamma = it.torsion_gamma;
            info.star = static_cast<int>(gi);
        }
        gens_[gi] = info;
    }
    // Pair the remaining boundary edges.
    for (size_t gi = 0; gi < order.size(); ++gi) {
        GeneratorInfo& me = gens_[gi];
        if (me.torsion != Torsion::none || me.star >= 0) continue;
        const Item& it = items[static_cast<size_t>(order[gi])];
        int partner_coset = coset_of(it.A * kSigma);
        if (partner_coset == it.coset) {
            me.torsion = Torsion::two;
            me.star = static_cast<int>(gi);
            me.gamma = canon_sign(it.A * kSigma * it.A.inverse());
            if (!me.gamma.in_gamma0(M)) throw InternalError("2-torsion pairing left Gamma_0");
            continue;
        }
        int found = -1;
        for (size_t gj = gi + 1; gj < order.size(); ++gj) {
            const Item& jt = items[static_cast<size_t>(order[gj])];
            if (gens_[gj].star >= 0 || gens_[gj].torsion != Torsion::none) continue;
            if (jt.coset == partner_coset) {
                found = static_cast<int>(gj);
                break;
            }
        }
        if (found < 0) throw InternalError("unpaired boundary edge");
        const Item& jt = items[static_cast<size_t>(order[static_cast<size_t>(found)])];
        me.star = found;
        gens_[static_cast<size_t>(found)].star = static_cast<int>(gi);
        me.gamma = canon_sign(it.A * kSigma * jt.A.inverse());
        gens_[static_cast<size_t>(found)].gamma = canon_sign(jt.A * kSigma * it.A.inverse());
        if (!me.gamma.in_gamma0(M) || !gens_[static_cast<size_t>(found)].gamma.in_gamma0(M))
            throw InternalError("side pairing left Gamma_0");
    }

    // Resolve item expressions down to generators: E(item) = sum of children.
    std::vector<std::vector<std::pair<int, int>>> item_expr(items.size());
    std::vector<char> done(items.size(), 0);
    std::function<const std::vector<std::pair<int, int>>&(int)> resolve =
        [&](int id) -> const std::vector<std::pair<int, int>>& {
        if (done[static_cast<size_t>(id)]) return item_expr[static_cast<size_t>(id)];
        const Item& it = items[static_cast<size_t>(id)];
        std::vector<std::pair<int, int>> e;
        if (it.gen >= 0) {
            e.push_back({1, it.gen});
        } else {
            if (it.child1 < 0) throw InternalError("interior item without children");
            for (auto [s, g] : resolve(it.child1)) e.push_back({s, g});
            for (auto [s, g] : resolve(it.child2)) e.push_back({s, g});
        }
        item_expr[static_cast<size_t>(id)] = std::move(e);
        done[static_cast<size_t>(id)] = 1;
        return item_expr[static_cast<size_t>(id)];
    };
    coset_expr_.assign(static_cast<size_t>(n), {});
    for (int xi = 0; xi < n; ++xi) {
        auto [sign, id] = coset_link[static_cast<size_t>(xi)];
        if (id < 0) throw InternalError("coset without expression");
        for (auto [s, g] : resolve(id))
            coset_expr_[static_cast<size_t>(xi)].push_back({sign * s, g});
    }
}

void SymbolSpacePresentation::build_cusps() {
    int n = coset_count();
    cusp_orbit_of_coset_.assign(static_cast<size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        if (cusp_orbit_of_coset_[static_cast<size_t>(i)] >= 0) continue;
        int id = static_cast<int>(cusp_reps_.size());
        int width = 0;
        int j = i;
        do {
            cusp_orbit_of_coset_[static_cast<size_t>(j)] = id;
            j = label_action(j, kGamma1);
            ++width;
        } while (j != i);
        const IntMatrix2& g = reps_.at(static_cast<size_t>(i));
        cusp_reps_.push_back(Cusp(g.a, g.c));
        cusp_widths_.push_back(width);
        cusp_scalings_.push_back(g);
        cusp_base_coset_.push_back(i);
    }
}

std::pair<int, IntMatrix2> SymbolSpacePresentation::cusp_class_of(const Cusp& x) const {
    // Complete x = n/d to a unimodular matrix g with g(inf) = x.
    mpz_class u, v, g;
    mpz_gcdext(g.get_mpz_t(), v.get_mpz_t(), u.get_mpz_t(), x.num.get_mpz_t(), x.den.get_mpz_t());
    if (g != 1) throw InternalError("cusp not in lowest terms");
    // x.num * v + x.den * u = 1  ->  g = [[num, -u],[den, v]] has det 1
    IntMatrix2 gx(x.num, -u, x.den, v);
    int xi = coset_of(gx);
    int cls = cusp_orbit_of_coset_.at(static_cast<size_t>(xi));
    int target = cusp_base_coset_.at(static_cast<size_t>(cls));
    // Find the gamma_1 power aligning the cosets.
    IntMatrix2 pw = IntMatrix2::identity();
    int j = xi;
    for (int step = 0; step <= cusp_widths_[static_cast<size_t>(cls)]; ++step) {
        if (j == target) {
            IntMatrix2 gamma = gx * pw * cusp_scalings_[static_cast<size_t>(cls)].inverse();
            gamma = canon_sign(gamma);
            if (!gamma.in_gamma0(level_)) throw InternalError("cusp map left Gamma_0");
            return {cls, gamma};
        }
        pw = pw * kGamma1;
        j = label_action(j, kGamma1);
    }
    throw InternalError("cusp class alignment failed");
}

std::shared_ptr<const SymbolSpacePresentation> SymbolSpacePresentation::build(long level) {
    if (level < 1) throw PreconditionError("level must be >= 1");
    auto pres = std::shared_ptr<SymbolSpacePresentation>(new SymbolSpacePresentation());
    pres->level_ = level;
    pres->build_p1();
    pres->build_domain();

    // Relations: the boundary sum, then one per pair / torsion generator.
    Relation sum;
    for (int i = 0; i < pres->generator_count(); ++i)
        sum.terms.push_back({IntMatrix2::identity(), i});
    pres->relations_.push_back(sum);
    for (int i = 0; i < pres->generator_count(); ++i) {
        const GeneratorInfo& g = pres->gens_[static_cast<size_t>(i)];
        if (g.torsion == Torsion::three) {
            Relation r;
            r.terms.push_back({IntMatrix2::identity(), i});
            r.terms.push_back({g.gamma, i});
            r.terms.push_back({g.gamma * g.gamma, i});
            pres->relations_.push_back(r);
        } else if (g.torsion == Torsion::two) {
            Relation r;
            r.terms.push_back({IntMatrix2::identity(), i});
            r.terms.push_back({g.gamma, i});
            pres->relations_.push_back(r);
        } else if (g.star > i) {
            Relation r;
            r.terms.push_back({IntMatrix2::identity(), i});
            r.terms.push_back({g.gamma, g.star});
            pres->relations_.push_back(r);
        }
    }

    pres->build_cusps();
    pres->verify_relations();
    return pres;
}

Divisor SymbolSpacePresentation::generator_divisor(int i) const {
    const GeneratorInfo& g = gens_.at(static_cast<size_t>(i));
    return path_divisor(g.from, g.to);
}

const std::vector<std::pair<int, int>>& SymbolSpacePresentation::coset_expression(int xi) const {
    return coset_expr_.at(static_cast<size_t>(xi));
}

void SymbolSpacePresentation::verify_relations() const {
    for (const Relation& r : relations_) {
        Divisor acc;
        for (const auto& [gamma, gi] : r.terms)
            add_to(acc, apply_matrix(gamma, generator_divisor(gi)), 1);
        if (!divisor_is_zero(acc))
            throw InternalError("presentation relation fails as divisors");
    }
    // Every coset representative path must match its recorded expression.
    for (int xi = 0; xi < coset_count(); ++xi) {
        Divisor acc = matrix_path(reps_[static_cast<size_t>(xi)]);
        for (auto [s, g] : coset_expr_[static_cast<size_t>(xi)])
            add_to(acc, generator_divisor(g), -s);
        if (!divisor_is_zero(acc))
            throw InternalError("coset expression fails as divisors");
    }
}

// ---------------------------------------------------------------------------
// Decomposition of divisors
// ---------------------------------------------------------------------------

namespace {
// Unimodular chain from inf to x along continued-fraction convergents.
std::vector<IntMatrix2> unimodular_chain(const Cusp& x) {
    std::vector<IntMatrix2> out;
    if (x.is_infinity()) return out;
    mpz_class num = x.num, den = x.den; // den >= 1
    mpz_class hm1 = 1, km1 = 0, hm2 = 0, km2 = 1;
    while (den != 0) {
        mpz_class quo, rem;
        mpz_fdiv_qr(quo.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
        mpz_class h = quo * hm1 + hm2;
        mpz_class kq = quo * km1 + km2;
        IntMatrix2 g(hm1, h, km1, kq);
        if (g.det() == -1) {
            g.b = -g.b;
            g.d = -g.d;
        }
        if (g.det() != 1) throw InternalError("chain step not unimodular");
        out.push_back(g);
        hm2 = hm1;
        km2 = km1;
        hm1 = h;
        km1 = kq;
        num = den;
        den = rem;
    }
    return out;
}
} // namespace

DivisorDecomposition SymbolSpacePresentation::decompose(const Divisor& d) const {
    if (divisor_degree(d) != 0) throw PreconditionError("decompose needs a degree-zero divisor");
    DivisorDecomposition out;
    for (const auto& [cusp, coeff] : d) {
        if (coeff == 0 || cusp.is_infinity()) continue;
        for (const IntMatrix2& g : unimodular_chain(cusp)) {
            int xi = coset_of(g);
            IntMatrix2 gamma = g * reps_[static_cast<size_t>(xi)].inverse();
            gamma = canon_sign(gamma);
            if (!gamma.in_gamma0(level_)) throw InternalError("decompose product left Gamma_0");
            for (auto [s, gi] : coset_expr_[static_cast<size_t>(xi)]) {
                DecompTerm t;
                t.coeff = coeff * s;
                t.gamma = gamma;
                t.gen = gi;
                out.terms.push_back(std::move(t));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Polynomial action and classical symbols
// ---------------------------------------------------------------------------

RatPoly poly_act(const RatPoly& P, const IntMatrix2& g, int k) {
    RatPoly out(static_cast<size_t>(k - 1), 0);
    // (a - bX)^{k-2-i} (-c + dX)^i per input coefficient i
    for (size_t i = 0; i < P.size(); ++i) {
        if (P[i] == 0) continue;
        // expand (-c + dX)^i
        std::vector<mpz_class> t1(i + 1);
        for (size_t r = 0; r <= i; ++r) {
            mpz_class pc, pd;
            mpz_pow_ui(pc.get_mpz_t(), mpz_class(-g.c).get_mpz_t(), static_cast<unsigned long>(i - r));
            mpz_pow_ui(pd.get_mpz_t(), g.d.get_mpz_t(), static_cast<unsigned long>(r));
            t1[r] = binom_int(static_cast<long>(i), static_cast<unsigned long>(r)) * pc * pd;
        }
        size_t e = static_cast<size_t>(k - 2) - i;
        std::vector<mpz_class> t2(e + 1);
        for (size_t s = 0; s <= e; ++s) {
            mpz_class pa, pb;
            mpz_pow_ui(pa.get_mpz_t(), g.a.get_mpz_t(), static_cast<unsigned long>(e - s));
            mpz_pow_ui(pb.get_mpz_t(), mpz_class(-g.b).get_mpz_t(), static_cast<unsigned long>(s));
            t2[s] = binom_int(static_cast<long>(e), static_cast<unsigned long>(s)) * pa * pb;
        }
        for (size_t r = 0; r <= i; ++r)
            for (size_t s = 0; s <= e; ++s)
                out[r + s] += P[i] * mpq_class(t1[r] * t2[s]);
    }
    return out;
}

RatPoly poly_add(const RatPoly& a, const RatPoly& b) {
    RatPoly out(std::max(a.size(), b.size()), 0);
    for (size_t i = 0; i < a.size(); ++i) out[i] += a[i];
    for (size_t i = 0; i < b.size(); ++i) out[i] += b[i];
    return out;
}

RatPoly poly_scale(const RatPoly& a, const mpq_class& s) {
    RatPoly out = a;
    for (auto& x : out) x *= s;
    return out;
}

bool poly_is_zero(const RatPoly& a) {
    for (const auto& x : a)
        if (x != 0) return false;
    return true;
}

RatPoly ClassicalSymbol::evaluate(const Divisor& d) const {
    DivisorDecomposition dec = pres->decompose(d);
    RatPoly acc(static_cast<size_t>(k - 1), 0);
    for (const DecompTerm& t : dec.terms) {
        RatPoly v = poly_act(values[static_cast<size_t>(t.gen)], t.gamma.inverse(), k);
        acc = poly_add(acc, poly_scale(v, mpq_class(t.coeff)));
    }
    return acc;
}

void ClassicalSymbol::normalize_integral(mpq_class* applied_scale) {
    QVec flat;
    for (const auto& v : values)
        for (const auto& x : v) flat.push_back(x);
    std::vector<mpz_class> prim = primitive_integral(flat);
    mpq_class scale = 0;
    for (size_t i = 0; i < flat.size(); ++i)
        if (flat[i] != 0) {
            scale = mpq_class(prim[i]) / flat[i];
            break;
        }
    size_t idx = 0;
    for (auto& v : values)
        for (auto& x : v) x = mpq_class(prim[idx++]);
    if (applied_scale) *applied_scale = scale;
}

std::vector<RatPoly> ClassicalSymbol::relation_residuals() const {
    std::vector<RatPoly> out;
    for (const auto& rel : pres->relations()) {
        RatPoly acc(static_cast<size_t>(k - 1), 0);
        for (const auto& [gamma, gi] : rel.terms)
            acc = poly_add(acc, poly_act(values[static_cast<size_t>(gi)], gamma.inverse(), k));
        out.push_back(std::move(acc));
    }
    return out;
}

bool ClassicalSymbol::relations_hold() const {
    for (const auto& r : relation_residuals())
        if (!poly_is_zero(r)) return false;
    return true;
}

std::string ClassicalSymbol::to_text() const {
    std::ostringstream os;
    os << pres->level() << " " << k << " " << pres->generator_count() << "\n";
    for (const auto& v : values) {
        for (size_t i = 0; i < v.size(); ++i)
            os << (i ? " " : "") << v[i].get_str();
        os << "\n";
    }
    return os.str();
}

ClassicalSymbol hecke(const ClassicalSymbol& s, long ell) {
    long M = s.pres->level();
    std::vector<IntMatrix2> mats;
    for (long b = 0; b < ell; ++b) mats.push_back(IntMatrix2(1, b, 0, ell));
    if (M % ell != 0) mats.push_back(IntMatrix2(ell, 0, 0, 1));

    ClassicalSymbol out;
    out.pres = s.pres;
    out.k = s.k;
    out.values.resize(s.values.size());
    for (int i = 0; i < s.pres->generator_count(); ++i) {
        Divisor di = s.pres->generator_divisor(i);
        RatPoly acc(static_cast<size_t>(s.k - 1), 0);
        for (const IntMatrix2& m : mats) {
            RatPoly v = s.evaluate(apply_matrix(m, di));
            acc = poly_add(acc, poly_act(v, m, s.k));
        }
        out.values[static_cast<size_t>(i)] = std::move(acc);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Symbol spaces
// ---------------------------------------------------------------------------

namespace {

// Matrix of v -> v || g on polynomials of degree <= k-2 (columns = images
// of the monomials).
QMat action_matrix(const IntMatrix2& g, int k) {
    size_t n = static_cast<size_t>(k - 1);
    QMat W(n, QVec(n, 0));
    for (size_t c = 0; c < n; ++c) {
        RatPoly e(n, 0);
        e[c] = 1;
        RatPoly img = poly_act(e, g, k);
        for (size_t r = 0; r < n; ++r) W[r][c] = img[r];
    }
    return W;
}

std::vector<ClassicalSymbol> vectors_to_symbols(std::shared_ptr<const SymbolSpacePresentation> pres,
                                                int k, const std::vector<QVec>& vecs) {
    std::vector<ClassicalSymbol> out;
    size_t n = static_cast<size_t>(k - 1);
    for (const QVec& v : vecs) {
        ClassicalSymbol s;
        s.pres = pres;
        s.k = k;
        s.values.resize(static_cast<size_t>(pres->generator_count()));
        for (int g = 0; g < pres->generator_count(); ++g) {
            RatPoly poly(n, 0);
            for (size_t c = 0; c < n; ++c) poly[c] = v[static_cast<size_t>(g) * n + c];
            s.values[static_cast<size_t>(g)] = std::move(poly);
        }
        out.push_back(std::move(s));
    }
    return out;
}

QVec symbol_to_vector(const ClassicalSymbol& s) {
    QVec v;
    for (const auto& poly : s.values)
        for (const auto& x : poly) v.push_back(x);
    return v;
}

} // namespace

std::vector<ClassicalSymbol> symbol_space(std::shared_ptr<const SymbolSpacePresentation> pres, int k) {
    size_t n = static_cast<size_t>(k - 1);
    size_t cols = static_cast<size_t>(pres->generator_count()) * n;
    QMat rows;
    for (const auto& rel : pres->relations()) {
        QMat block(n, QVec(cols, 0));
        for (const auto& [gamma, gi] : rel.terms) {
            QMat W = action_matrix(gamma.inverse(), k);
            for (size_t r = 0; r < n; ++r)
                for (size_t c = 0; c < n; ++c)
                    block[r][static_cast<size_t>(gi) * n + c] += W[r][c];
        }
        for (auto& row : block) rows.push_back(std::move(row));
    }
    std::vector<QVec> ker = kernel_basis(std::move(rows), cols);
    return vectors_to_symbols(pres, k, ker);
}

int full_space_dimension(const SymbolSpacePresentation& pres, int k) {
    size_t n = static_cast<size_t>(k - 1);
    int m = pres.coset_count();
    size_t cols = static_cast<size_t>(m) * n;
    QMat rows;
    std::vector<char> seen_sigma(static_cast<size_t>(m), 0), seen_tau(static_cast<size_t>(m), 0);
    auto add_relation = [&](const std::vector<std::pair<IntMatrix2, int>>& terms) {
        QMat block(n, QVec(cols, 0));
        for (const auto& [gamma, xi] : terms) {
            QMat W = action_matrix(gamma.inverse(), k);
            for (size_t r = 0; r < n; ++r)
                for (size_t c = 0; c < n; ++c)
                    block[r][static_cast<size_t>(xi) * n + c] += W[r][c];
        }
        for (auto& row : block) rows.push_back(std::move(row));
    };
    for (int xi = 0; xi < m; ++xi) {
        const IntMatrix2& g = pres.coset_reps()[static_cast<size_t>(xi)];
        if (!seen_sigma[static_cast<size_t>(xi)]) {
            int xs = pres.coset_of(g * kSigma);
            seen_sigma[static_cast<size_t>(xi)] = seen_sigma[static_cast<size_t>(xs)] = 1;
            IntMatrix2 gamma = g * kSigma * pres.coset_reps()[static_cast<size_t>(xs)].inverse();
            add_relation({{IntMatrix2::identity(), xi}, {gamma, xs}});
        }
        if (!seen_tau[static_cast<size_t>(xi)]) {
            int x1 = pres.coset_of(g * kTau);
            int x2 = pres.coset_of(g * kTau * kTau);
            seen_tau[static_cast<size_t>(xi)] = seen_tau[static_cast<size_t>(x1)] =
                seen_tau[static_cast<size_t>(x2)] = 1;
            IntMatrix2 g1 = g * kTau * pres.coset_reps()[static_cast<size_t>(x1)].inverse();
            IntMatrix2 g2 = g * kTau * kTau * pres.coset_reps()[static_cast<size_t>(x2)].inverse();
            add_relation({{IntMatrix2::identity(), xi}, {g1, x1}, {g2, x2}});
        }
    }
    return static_cast<int>(kernel_basis(std::move(rows), cols).size());
}

std::vector<ClassicalSymbol> boundary_symbols(std::shared_ptr<const SymbolSpacePresentation> pres, int k) {
    std::vector<ClassicalSymbol> out;
    size_t n = static_cast<size_t>(k - 1);
    for (int cls = 0; cls < pres->cusp_class_count(); ++cls) {
        // Stabilizer generator of the class representative.
        IntMatrix2 g = pres->cusp_scaling(cls);
        IntMatrix2 pi = g;
        for (int i = 0; i < pres->cusp_width(cls); ++i) pi = pi * kGamma1;
        pi = pi * g.inverse();
        if (!pi.in_gamma0(pres->level()))
            throw InternalError("cusp stabilizer left Gamma_0");
        QMat W = action_matrix(pi, k);
        for (size_t i = 0; i < n; ++i) W[i][i] -= 1;
        std::vector<QVec> inv = kernel_basis(std::move(W), n);
        for (const QVec& vq : inv) {
            RatPoly v(vq.begin(), vq.end());
            ClassicalSymbol s;
            s.pres = pres;
            s.k = k;
            s.values.resize(static_cast<size_t>(pres->generator_count()));
            auto value_at = [&](const Cusp& x) -> RatPoly {
                auto [c, gamma] = pres->cusp_class_of(x);
                if (c != cls) return RatPoly(n, 0);
                return poly_act(v, gamma.inverse(), k);
            };
            for (int gi = 0; gi < pres->generator_count(); ++gi) {
                const GeneratorInfo& info = pres->generators()[static_cast<size_t>(gi)];
                RatPoly val = poly_add(value_at(info.to), poly_scale(value_at(info.from), -1));
                s.values[static_cast<size_t>(gi)] = std::move(val);
            }
            if (!s.relations_hold())
                throw InternalError("boundary symbol fails relations");
            out.push_back(std::move(s));
        }
    }
    return out;
}

int cuspidal_dimension(std::shared_ptr<const SymbolSpacePresentation> pres, int k) {
    std::vector<ClassicalSymbol> basis = symbol_space(pres, k);
    std::vector<ClassicalSymbol> bnd = boundary_symbols(pres, k);
    QMat rows;
    for (const auto& b : bnd) rows.push_back(symbol_to_vector(b));
    size_t rank = rows.empty() ? 0 : rref(rows).size();
    return static_cast<int>(basis.size() - rank);
}

std::vector<Eigensystem> cuspidal_eigensymbols(std::shared_ptr<const SymbolSpacePresentation> pres,
                                               int k, long hecke_bound) {
    std::vector<ClassicalSymbol> basis = symbol_space(pres, k);
    size_t D = basis.size();
    std::vector<Eigensystem> result;
    if (D == 0) return result;

    std::vector<QVec> ambient;
    for (const auto& b : basis) ambient.push_back(symbol_to_vector(b));

    struct Block {
        std::vector<QVec> vecs; // coordinates in the symbol basis
        std::map<long, mpz_class> ap;
    };
    std::vector<Block> blocks;
    {
        Block all;
        for (size_t i = 0; i < D; ++i) {
            QVec e(D, 0);
            e[i] = 1;
            all.vecs.push_back(std::move(e));
        }
        blocks.push_back(std::move(all));
    }

    std::vector<long> primes;
    for (long q = 2; q <= hecke_bound; ++q) {
        bool pr = q > 1;
        for (long d = 2; d * d <= q; ++d)
            if (q % d == 0) pr = false;
        if (pr) primes.push_back(q);
    }

    for (long ell : primes) {
        // Matrix of T_ell on the symbol space.
        QMat T(D, QVec(D, 0));
        for (size_t j = 0; j < D; ++j) {
            ClassicalSymbol img = hecke(basis[j], ell);
            QVec coords;
            try {
                coords = coords_in_span(ambient, symbol_to_vector(img));
            } catch (const InternalError&) {
                throw InvariantViolation("Hecke operator does not preserve the symbol space");
            }
            for (size_t i = 0; i < D; ++i) T[i][j] = coords[i];
        }
        // Eigenvalue window: |a| <= 2 ell^{(k-1)/2}.
        mpz_class w2 = 4 * PadicScalar::pow_p(ell, k - 1);
        mpz_class w;
        mpz_sqrt(w.get_mpz_t(), w2.get_mpz_t());
        if (w > 5000000)
            throw PreconditionError("eigenvalue scan window too large; lower the Hecke bound");
        long window = w.get_si();

        std::vector<Block> next;
        for (Block& blk : blocks) {
            size_t r = blk.vecs.size();
            // T restricted to the block.
            QMat Tblk(r, QVec(r, 0));
            for (size_t j = 0; j < r; ++j) {
                QVec img = q_apply(T, blk.vecs[j]);
                QVec c = coords_in_span(blk.vecs, img);
                for (size_t i = 0; i < r; ++i) Tblk[i][j] = c[i];
            }
            QVec cp = charpoly(Tblk);
            for (long a = -window; a <= window; ++a) {
                if (poly_eval(cp, mpz_class(a)) != 0) continue;
                std::vector<QVec> K = generalized_kernel(Tblk, mpq_class(a), r);
                if (K.empty()) continue;
                Block sub;
                sub.ap = blk.ap;
                sub.ap[ell] = a;
                for (const QVec& kv : K) {
                    QVec v(D, 0);
                    for (size_t j = 0; j < r; ++j)
                        for (size_t i = 0; i < D; ++i) v[i] += kv[j] * blk.vecs[j][i];
                    sub.vecs.push_back(std::move(v));
                }
                next.push_back(std::move(sub));
            }
        }
        blocks = std::move(next);
        if (blocks.empty()) break;
    }

    // Boundary systems can slip through the eigenvalue window when every
    // scan prime divides the level (U_ell has Eisenstein eigenvalue 1);
    // drop any block lying inside the boundary span.
    std::vector<QVec> bnd;
    for (const auto& b : boundary_symbols(pres, k)) bnd.push_back(symbol_to_vector(b));
    auto in_boundary_span = [&](const Block& blk) {
        for (const QVec& v : blk.vecs) {
            QVec amb(ambient.empty() ? 0 : ambient[0].size(), 0);
            for (size_t i = 0; i < D; ++i)
                for (size_t c = 0; c < amb.size(); ++c) amb[c] += v[i] * ambient[i][c];
            try {
                coords_in_span(bnd, amb);
            } catch (const InternalError&) {
                return false; // outside: a genuine cuspidal vector
            }
        }
        return true;
    };

    for (Block& blk : blocks) {
        if (in_boundary_span(blk)) continue;
        Eigensystem sys;
        sys.ap = blk.ap;
        sys.multiplicity = static_cast<int>(blk.vecs.size());
        // Canonical representative: RREF first row, then ambient, primitive.
        QMat m = blk.vecs;
        rref(m);
        QVec amb(ambient.empty() ? 0 : ambient[0].size(), 0);
        for (size_t i = 0; i < D; ++i)
            for (size_t c = 0; c < amb.size(); ++c) amb[c] += m[0][i] * ambient[i][c];
        std::vector<mpz_class> prim = primitive_integral(amb);
        QVec ambq(prim.size());
        for (size_t i = 0; i < prim.size(); ++i) ambq[i] = mpq_class(prim[i]);
        sys.symbol = vectors_to_symbols(pres, k, {ambq})[0];
        result.push_back(std::move(sys));
    }
    // Deterministic order: by eigenvalue table.
    std::sort(result.begin(), result.end(), [](const Eigensystem& x, const Eigensystem& y) {
        return x.ap < y.ap;
    });
    return result;
}

} // namespace padiclf
