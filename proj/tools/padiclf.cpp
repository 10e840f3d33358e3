// Command-line front end: presentations, eigensymbols, lifts, moment
// tables, twist values, and the selftest corpus.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "padiclf/driver.hpp"

using namespace padiclf;

namespace {

int thread_count_from_env() {
    const char* env = std::getenv("PADICLF_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot open output file: " + path);
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PreconditionError("cannot open checkpoint: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void print_scalar_tuple(std::ostream& os, const std::vector<PadicScalar>& v) {
    os << "[";
    for (size_t i = 0; i < v.size(); ++i) {
        auto [res, prec] = v[i].serialized();
        os << (i ? ", " : "") << res << " + O(p^" << prec << ")";
    }
    os << "]";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"p-adic L-functions from overconvergent modular symbol lifts"};
    app.require_subcommand(1);

    long N = 11, p = 3, hecke_bound = 13, twist = 0;
    int k = 2, depth = 4, eigen_index = 0, class_exponent = 1, jmax = 4;
    std::string case_override = "auto", out_path, checkpoint_path;
    bool fault = false, full_series = false;

    auto add_level_weight = [&](CLI::App* cmd) {
        cmd->add_option("--level", N, "level N");
        cmd->add_option("--weight", k, "weight k (the construction is for even k)");
    };

    CLI::App* space = app.add_subcommand("space", "presentation and dimension report");
    add_level_weight(space);

    CLI::App* eigen = app.add_subcommand("eigen", "rational cuspidal eigensymbols");
    add_level_weight(eigen);
    eigen->add_option("--hecke-bound", hecke_bound, "split with primes up to this bound");
    eigen->add_option("--out", out_path, "write the selected symbol as text");
    eigen->add_option("--eigen-index", eigen_index, "which eigensystem to write");

    CLI::App* lift = app.add_subcommand("lift", "lift an eigensymbol and checkpoint it");
    add_level_weight(lift);
    lift->add_option("--p", p, "the prime p");
    lift->add_option("--depth", depth, "target filtration depth M");
    lift->add_option("--hecke-bound", hecke_bound, "eigensystem search bound");
    lift->add_option("--case", case_override, "auto|ordinary|supersingular|semistable");
    lift->add_option("--eigen-index", eigen_index, "eigensystem selector");
    lift->add_option("--checkpoint", checkpoint_path, "checkpoint output path");
    lift->add_option("--out", out_path, "verification report output path");

    CLI::App* moments = app.add_subcommand("moments", "per-class moment table from a checkpoint");
    moments->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
    moments->add_option("--class-exponent", class_exponent, "classes mod p^n");
    moments->add_option("--jmax", jmax, "largest moment index");
    moments->add_option("--out", out_path, "JSON output path");

    CLI::App* lvalue = app.add_subcommand("lvalue", "tame twist values from a checkpoint");
    lvalue->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
    lvalue->add_option("--twist", twist, "power i of the Teichmuller character");
    lvalue->add_option("--jmax", jmax, "largest moment index");
    lvalue->add_flag("--full-series", full_series, "print unrestricted moments too");

    CLI::App* self = app.add_subcommand("selftest", "run the pinned property corpus");
    self->add_flag("--inject-fault", fault, "flip a binomial sign (must fail)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (space->parsed()) {
            if (k % 2 != 0)
                std::cerr << "note: odd weight is outside the intended scope; expect a zero space\n";
            SpaceReport rep = cmd_space(N, k);
            std::cout << "level " << rep.level << ": " << rep.generators << " generators, "
                      << rep.cosets << " cosets, " << rep.cusps << " cusps\n"
                      << "symbol space dim " << rep.total_dim << ", cuspidal dim "
                      << rep.cuspidal_dim << "\n";
            return 0;
        }
        if (eigen->parsed()) {
            EigenReport rep = cmd_eigen(N, k, hecke_bound);
            std::cout << rep.systems.size() << " rational cuspidal eigensystem(s)\n";
            for (size_t i = 0; i < rep.systems.size(); ++i) {
                std::cout << "#" << i << " multiplicity " << rep.systems[i].multiplicity << ":";
                for (const auto& [ell, a] : rep.systems[i].ap)
                    std::cout << " a_" << ell << "=" << a.get_str();
                std::cout << "\n";
            }
            if (!out_path.empty()) {
                if (rep.systems.empty()) throw NoRationalEigensystem("nothing to write");
                write_file(out_path,
                           rep.systems.at(static_cast<size_t>(eigen_index)).symbol.to_text());
            }
            return 0;
        }
        if (lift->parsed()) {
            if (k % 2 != 0)
                std::cerr << "note: odd weight is outside the intended scope; expect a zero space\n";
            RunConfig cfg;
            cfg.N = N;
            cfg.k = k;
            cfg.p = p;
            cfg.M_target = depth;
            cfg.hecke_bound = hecke_bound;
            cfg.case_override = case_override;
            cfg.eigen_index = eigen_index;
            cfg.threads = thread_count_from_env();
            LiftResult res = cmd_lift(cfg);
            std::string report = lift_report_to_json(res);
            std::cout << report << "\n";
            if (!out_path.empty()) write_file(out_path, report);
            if (!checkpoint_path.empty()) write_file(checkpoint_path, checkpoint_to_json(res.symbol));
            return 0;
        }
        if (moments->parsed()) {
            OverconvergentSymbol sym = checkpoint_from_json(read_file(checkpoint_path));
            PadicMeasure meas = cmd_moments(sym, class_exponent, jmax); // throws on invariant failure
            std::string text = measure_to_json(meas);
            if (!out_path.empty())
                write_file(out_path, text);
            else
                std::cout << text << "\n";
            return 0;
        }
        if (lvalue->parsed()) {
            OverconvergentSymbol sym = checkpoint_from_json(read_file(checkpoint_path));
            PadicMeasure meas = cmd_moments(sym, 1, jmax);
            for (int j = 0; j <= jmax; ++j) {
                std::cout << "twist omega^" << twist << " z^" << j << " : ";
                print_scalar_tuple(std::cout, twist_value(meas, twist, j));
                std::cout << "\n";
            }
            if (full_series) {
                auto series = cauchy_series(sym, jmax, false);
                for (int j = 0; j <= jmax; ++j) {
                    std::cout << "full moment z^" << j << " : ";
                    print_scalar_tuple(std::cout, series[static_cast<size_t>(j)]);
                    std::cout << "\n";
                }
            }
            return 0;
        }
        if (self->parsed()) {
            int failures = selftest(std::cout, fault);
            return failures == 0 ? 0 : 2;
        }
    } catch (const PreconditionError& e) {
        std::cerr << "precondition error: " << e.what() << "\n";
        return 3;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
