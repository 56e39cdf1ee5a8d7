// Acceptance suite. Prints one PASS/FAIL line per criterion followed by
// indented detail lines; exits nonzero when any criterion fails.

#include "envyfree/cli.hpp"
#include "envyfree/io.hpp"
#include "envyfree/lattice.hpp"
#include "envyfree/tarski.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#ifndef ENVYFREE_CLI_PATH
#error "ENVYFREE_CLI_PATH must name the envyfree executable"
#endif

using namespace envyfree;
using envyfree::test::ids;

namespace {

constexpr std::uint64_t kPropertyMarkets = 200;
constexpr std::uint64_t kVacancyMarkets = 200;

class Criterion {
public:
    Criterion(int number, std::string title) : number_(number), title_(std::move(title)) {}

    void expect(bool ok, const std::string& what) {
        ++checks_;
        if (!ok) failures_.push_back(what);
    }
    void note(const std::string& line) { notes_.push_back(line); }
    bool passed() const { return failures_.empty(); }

    void report() const {
        std::cout << "criterion " << number_ << ": " << (passed() ? "PASS" : "FAIL") << "  " << title_ << " (" << checks_
                  << " checks, " << failures_.size() << " failed)\n";
        for (const auto& n : notes_) std::cout << "    " << n << "\n";
        const std::size_t shown = std::min<std::size_t>(failures_.size(), 20);
        for (std::size_t i = 0; i < shown; ++i) std::cout << "    FAILED: " << failures_[i] << "\n";
        if (failures_.size() > shown) std::cout << "    ... " << failures_.size() - shown << " more\n";
    }

private:
    int number_;
    std::string title_;
    std::size_t checks_ = 0;
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::set<ContractSet> as_set(const std::vector<ContractSet>& v) { return {v.begin(), v.end()}; }

// ---------------------------------------------------------------------------

void golden_counterexample(Criterion& c) {
    const auto m = test::lad_counterexample();
    const auto y = ids(m, {"x11", "x23"}), yp = ids(m, {"x21", "x22"});
    const auto yd = ids(m, {"x11", "x12", "x23"}), yh = ids(m, {"x13", "x21", "x22"});

    for (const auto& [name, s] : {std::pair{"Y", y}, std::pair{"Y'", yp}}) {
        c.expect(oracle::is_envy_free(m, s) && is_envy_free(m, s), std::string(name) + " envy-free");
        c.expect(!oracle::is_stable(m, s) && !is_stable(m, s), std::string(name) + " not stable");
    }
    c.expect(blocking_contracts(m, y) == ids(m, {"x12"}), "blocking(Y) = {x12}");
    c.expect(oracle::blocking(m, y) == ids(m, {"x12"}), "oracle blocking(Y) = {x12}");
    c.expect(blocking_contracts(m, yp) == ids(m, {"x13", "x23"}), "blocking(Y') = {x13, x23}");
    c.expect(oracle::blocking(m, yp) == ids(m, {"x13", "x23"}), "oracle blocking(Y') = {x13, x23}");

    const auto stable = enumerate(m, SolutionClass::stable);
    c.expect(doctor_optimal(m, stable) == yd, "doctor-optimal = {x11, x12, x23}");
    c.expect(hospital_optimal(m, stable) == yh, "hospital-optimal = {x13, x21, x22}");
    for (const auto& s : stable) {
        c.expect(oracle::dominates(m, yd, s), "doctor-optimal dominates every stable allocation");
        c.expect(oracle::dominates(m, s, yh), "every stable allocation dominates hospital-optimal");
    }

    c.expect(blair_dominates(m, yd, y), "Y^D dominates Y");
    c.expect(blair_dominates(m, y, yh), "Y dominates Y^H");
    c.expect(blair_dominates(m, yh, yp), "Y^H dominates Y'");
    c.expect(blair_dominates(m, yd, yh) && blair_dominates(m, yd, yp) && blair_dominates(m, y, yp),
             "dominance chain transitive pairs");

    c.expect(join(m, y, yh) == y, "join(Y, Y^H) = Y");
    const auto f = tarski_fixed_point(m, y).fixed_point;
    c.expect(f == yd, "fixed point from Y = Y^D");
    c.expect(f != join(m, y, yh), "fixed point from Y differs from join(Y, Y^H)");

    const auto lad = check_lad(m, m.doctor_index("d2"));
    c.expect(lad.status == CheckStatus::failed && lad.witness.has_value(), "LAD check flags d2");
    if (lad.witness) {
        const auto& w = *lad.witness;
        c.expect(w.choices.size() == 2 && w.choices[0].size() == 1 && w.choices[1].size() == 2,
                 "LAD witness choice sizes are 1 (superset) vs 2 (subset)");
        c.expect(witness_reproduces(m, w), "LAD witness replays");
        c.note("LAD witness for d2: C(" + braces(m, w.subsets[0]) + ") = " + braces(m, w.choices[0]) + ", C(" +
               braces(m, w.subsets[1]) + ") = " + braces(m, w.choices[1]));
    }
    c.expect(check_lad(m, m.doctor_index("d1")).passed(), "d1 satisfies LAD");
}

// ---------------------------------------------------------------------------

void twin_reconciliation(Criterion& c) {
    const auto doc = test::load_document("twin_contracts.market.json");
    const auto m = Market::from_spec(doc.spec);
    for (std::size_t d = 0; d < m.doctors().size(); ++d) {
        c.expect(check_substitutable(m, d).passed() && oracle::substitutable(m, d), m.doctor(d).id + " substitutable");
        c.expect(check_consistency(m, d).passed() && oracle::consistent(m, d), m.doctor(d).id + " consistent");
    }

    const auto a = ids(m, {"y11", "y12", "y21"}), b = ids(m, {"y11", "y12", "y22"});
    const auto u = choose_from_union(m, a, b);
    c.expect(u == ids(m, {"y11", "y12", "y21", "y22"}), "per-doctor choice from the union = {y11, y12, y21, y22}");
    c.note("join operands " + braces(m, a) + " / " + braces(m, b) + " envy-free: " +
           (oracle::is_envy_free(m, a) ? "yes" : "no") + " / " + (oracle::is_envy_free(m, b) ? "yes" : "no") +
           "; union choice = " + braces(m, u));

    c.expect(doc.reference.has_value(), "market file carries the reference lattice");
    if (!doc.reference) return;
    const auto g = hasse(m);
    const auto ef = enumerate(m, SolutionClass::envy_free);
    const auto st = enumerate(m, SolutionClass::stable);
    c.expect(as_set(ef) == oracle::subsets_in_class(m, oracle::Class::envy_free), "envy-free set equals oracle filter");
    c.expect(as_set(st) == oracle::subsets_in_class(m, oracle::Class::stable), "stable set equals oracle filter");

    const auto rec = reconcile(m, g, *doc.reference);
    c.expect(!rec.rows.empty(), "reconciliation report produced");
    std::size_t itemized = 0;
    for (const auto& row : rec.rows) {
        if (row.match) continue;
        c.expect(!row.witness.is_null(), "mismatch itemized with witness: " + row.claim);
        itemized += !row.witness.is_null();
    }
    c.note("computed " + std::to_string(ef.size()) + " envy-free and " + std::to_string(st.size()) +
           " stable allocations; reference claims " + std::to_string(doc.reference->envy_free_count.value_or(0)) + " and " +
           std::to_string(doc.reference->stable_count.value_or(0)));
    c.note(std::to_string(rec.mismatches()) + " mismatch(es) in " + std::to_string(rec.rows.size()) + " claim(s), " +
           std::to_string(itemized) + " with witnesses");
    std::string stable_list;
    for (const auto& s : st) stable_list += " " + braces(m, s);
    c.note("computed stable set:" + stable_list);
}

// ---------------------------------------------------------------------------

struct PropertyTally {
    std::size_t markets = 0, envy_free = 0, pairs = 0, max_nodes = 0;
};

void property_suite(Criterion& c, Criterion& oracle_eq, PropertyTally& tally) {
    for (std::uint64_t seed = 0; seed < kPropertyMarkets; ++seed) {
        const auto params = test::small_params(seed);
        const auto m = Market::from_spec(generate_responsive_market(params));
        const auto tag = "seed " + std::to_string(seed) + ": ";
        ++tally.markets;

        for (std::size_t d = 0; d < m.doctors().size(); ++d) c.expect(oracle::lad(m, d), tag + "doctor satisfies LAD");

        // Criterion 4 runs on the same markets.
        const SolutionClass classes[] = {SolutionClass::allocation, SolutionClass::individually_rational,
                                         SolutionClass::envy_free, SolutionClass::stable};
        const oracle::Class oracle_classes[] = {oracle::Class::allocation, oracle::Class::ir, oracle::Class::envy_free,
                                                oracle::Class::stable};
        std::vector<std::vector<ContractSet>> by_class;
        for (std::size_t k = 0; k < 4; ++k) {
            by_class.push_back(enumerate(m, classes[k]));
            oracle_eq.expect(as_set(by_class.back()) == oracle::subsets_in_class(m, oracle_classes[k]) &&
                                 by_class.back().size() == as_set(by_class.back()).size(),
                             tag + class_name(classes[k]) + " enumeration equals raw filter");
        }

        const auto& all = by_class[0];
        const auto& ef = by_class[2];
        const auto& st = by_class[3];
        const auto n = ef.size();
        tally.envy_free += n;
        tally.pairs += n * n;
        tally.max_nodes = std::max(tally.max_nodes, n);

        // (j) count identity on every allocation.
        for (const auto& y : all) c.expect(contract_count_identity(m, y), tag + "(j) count identity");

        std::unordered_map<ContractSet, std::size_t, ContractSetHash> index;
        for (std::size_t i = 0; i < n; ++i) index.emplace(ef[i], i);
        std::vector<std::vector<char>> dom(n, std::vector<char>(n, 0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) dom[i][j] = oracle::dominates(m, ef[i], ef[j]);

        // (b) partial order.
        for (std::size_t i = 0; i < n; ++i) {
            c.expect(dom[i][i], tag + "(b) reflexive");
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j && dom[i][j] && dom[j][i]) c.expect(false, tag + "(b) antisymmetry");
                if (!dom[i][j]) continue;
                for (std::size_t k = 0; k < n; ++k)
                    if (dom[j][k] && !dom[i][k]) c.expect(false, tag + "(b) transitivity");
            }
        }

        // (a) join closure and least upper bound; (b) meets as greatest lower bounds.
        std::vector<std::vector<std::size_t>> join_ix(n, std::vector<std::size_t>(n)), meet_ix(n, std::vector<std::size_t>(n));
        bool lattice_ok = true;
        for (std::size_t i = 0; i < n && lattice_ok; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const auto z = join(m, ef[i], ef[j]);
                c.expect(contract_count_identity(m, z), tag + "(j) count identity on join");
                const auto it = index.find(z);
                if (it == index.end()) {
                    c.expect(false, tag + "(a) join is envy-free");
                    lattice_ok = false;
                    break;
                }
                const auto zi = it->second;
                join_ix[i][j] = zi;
                c.expect(dom[zi][i] && dom[zi][j], tag + "(a) join is an upper bound");
                for (std::size_t w = 0; w < n; ++w)
                    if (dom[w][i] && dom[w][j] && !dom[w][zi]) c.expect(false, tag + "(a) join is least");

                const auto mt = meet(m, ef[i], ef[j], ef);
                const auto mi = index.at(mt);
                meet_ix[i][j] = mi;
                c.expect(dom[i][mi] && dom[j][mi], tag + "(b) meet is a lower bound");
                for (std::size_t w = 0; w < n; ++w)
                    if (dom[i][w] && dom[j][w] && !dom[mi][w]) c.expect(false, tag + "(b) meet is greatest");
            }
        }
        if (!lattice_ok) continue;

        // (c) Tarski operator and (d) isotonicity.
        std::vector<std::size_t> t_ix(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto t = tarski_step(m, ef[i]);
            c.expect(contract_count_identity(m, t), tag + "(j) count identity on step");
            const auto it = index.find(t);
            c.expect(it != index.end(), tag + "(c) step stays envy-free");
            if (it == index.end()) {
                lattice_ok = false;
                break;
            }
            t_ix[i] = it->second;
            c.expect(dom[t_ix[i]][i], tag + "(c) step dominates its input");
            c.expect((t_ix[i] == i) == oracle::is_stable(m, ef[i]), tag + "(c) fixed points are exactly the stable allocations");
        }
        if (!lattice_ok) continue;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (dom[i][j] && !dom[t_ix[i]][t_ix[j]]) c.expect(false, tag + "(d) isotone");

        // (e) stable set nonempty and a sublattice.
        c.expect(!st.empty(), tag + "(e) stable set nonempty");
        if (st.empty()) continue;
        std::vector<std::size_t> s_ix;
        for (const auto& s : st) s_ix.push_back(index.at(s));
        const std::set<std::size_t> stable_nodes(s_ix.begin(), s_ix.end());
        for (auto i : s_ix)
            for (auto j : s_ix) {
                c.expect(stable_nodes.count(join_ix[i][j]) > 0, tag + "(e) stable set closed under join");
                c.expect(stable_nodes.count(meet_ix[i][j]) > 0, tag + "(e) stable set closed under meet");
            }

        // (f)-(i).
        const auto yh = hospital_optimal(m, st);
        const auto yh_ix = index.at(yh);
        for (auto s : s_ix) c.expect(dom[s][yh_ix], tag + "hospital-optimal is the stable minimum");
        for (std::size_t i = 0; i < n; ++i) {
            const auto trace = tarski_fixed_point(m, ef[i]);
            c.expect(trace.fixed_point == ef[join_ix[i][yh_ix]], tag + "(f) fixed point = Y join Y^H");
            if (dom[i][yh_ix]) c.expect(oracle::is_stable(m, ef[i]), tag + "(g) dominating Y^H implies stable");
            for (std::size_t d = 0; d < m.doctors().size(); ++d)
                for (const auto& s : st)
                    c.expect(restrict_to_doctor(m, ef[i], d).size() <= restrict_to_doctor(m, s, d).size(),
                             tag + "(h) envy-free counts bounded by stable counts");
        }
        for (std::size_t d = 0; d < m.doctors().size(); ++d)
            for (const auto& s : st)
                c.expect(restrict_to_doctor(m, s, d).size() == restrict_to_doctor(m, st.front(), d).size(),
                         tag + "(i) doctor count invariant across stable set");
        for (std::size_t h = 0; h < m.hospitals().size(); ++h)
            for (const auto& s : st)
                c.expect(restrict_to_hospital(m, s, h).size() == restrict_to_hospital(m, st.front(), h).size(),
                         tag + "(i) hospital count invariant across stable set");
    }

    // The golden markets also go through the oracle comparison.
    for (const auto& m : {test::lad_counterexample(), test::twin_contracts()}) {
        for (auto [cls, ocls] : {std::pair{SolutionClass::allocation, oracle::Class::allocation},
                                 std::pair{SolutionClass::individually_rational, oracle::Class::ir},
                                 std::pair{SolutionClass::envy_free, oracle::Class::envy_free},
                                 std::pair{SolutionClass::stable, oracle::Class::stable}})
            oracle_eq.expect(as_set(enumerate(m, cls)) == oracle::subsets_in_class(m, ocls),
                             std::string("golden market ") + class_name(cls) + " enumeration equals raw filter");
    }
}

// ---------------------------------------------------------------------------

void vacancy_chains(Criterion& c) {
    std::size_t steps = 0, moved = 0;
    for (std::uint64_t seed = 0; seed < kVacancyMarkets; ++seed) {
        const auto m = test::small_market(1000 + seed);
        const auto tag = "seed " + std::to_string(1000 + seed) + ": ";
        const auto stable = enumerate(m, SolutionClass::stable);
        c.expect(!stable.empty(), tag + "stable allocation exists");
        if (stable.empty()) continue;

        std::mt19937_64 rng(seed);
        const auto& before = stable[rng() % stable.size()];
        std::vector<std::string> retiring;
        while (retiring.empty())
            for (const auto& d : m.doctors())
                if (rng() % 2) retiring.push_back(d.id);

        try {
            const auto r = vacancy_chain(m, {retiring, before});
            c.expect(oracle::is_envy_free(r.reduced, r.restriction), tag + "restriction envy-free in reduced market");
            c.expect(r.trace.iterations <= default_iteration_cap(r.reduced), tag + "terminates within cap");
            c.expect(oracle::is_stable(r.reduced, r.trace.fixed_point), tag + "ends at a stable allocation");
            const auto reduced_stable = enumerate(r.reduced, SolutionClass::stable);
            c.expect(std::find(reduced_stable.begin(), reduced_stable.end(), r.trace.fixed_point) != reduced_stable.end(),
                     tag + "end point is in the reduced market's stable set");
            steps += r.trace.iterations;
            moved += r.trace.iterations > 0;
        } catch (const RestrictionNotEnvyFree& e) {
            c.expect(false, tag + "restriction envy-free in reduced market (" + std::to_string(e.envy().size()) +
                                " envy witness(es))");
        } catch (const ModelViolation& e) {
            c.expect(false, tag + e.what());
        }
    }
    c.note(std::to_string(kVacancyMarkets) + " markets, " + std::to_string(moved) + " chains moved, " +
           std::to_string(steps) + " Tarski steps in total");
}

// ---------------------------------------------------------------------------

struct Capture {
    int code = -1;
    std::string out, err;
    bool operator==(const Capture&) const = default;
};

std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char ch : s) q += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
    return q + "'";
}

Capture invoke(const std::vector<std::string>& args, const std::filesystem::path& dir) {
    const auto out = dir / "stdout", err = dir / "stderr";
    std::string cmd = shell_quote(ENVYFREE_CLI_PATH);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " >" + shell_quote(out.string()) + " 2>" + shell_quote(err.string());
    const int status = std::system(cmd.c_str());
    Capture c;
    c.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    c.out = cli::read_file(out.string());
    c.err = cli::read_file(err.string());
    return c;
}

void cli_determinism(Criterion& c) {
    const auto dir = std::filesystem::temp_directory_path() / ("envyfree_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const auto lad = test::data_path("lad_counterexample.market.json");
    const auto twin = test::data_path("twin_contracts.market.json");
    const auto rnd = (dir / "random.market.json").string();

    const std::vector<std::vector<std::string>> commands = {
        {"random", "--doctors", "3", "--hospitals", "3", "--contracts", "9", "--seed", "17", "--out", rnd},
        {"validate", lad},
        {"validate", twin},
        {"validate", rnd},
        {"check", lad, "--allocation", "x11,x23"},
        {"check", twin, "--allocation", "y11,y12,y21"},
        {"enumerate", lad, "--class", "allocation"},
        {"enumerate", lad, "--class", "ir"},
        {"enumerate", twin, "--class", "envy-free"},
        {"enumerate", twin, "--class", "stable", "--count-only"},
        {"enumerate", rnd, "--class", "stable"},
        {"lattice", lad, "--format", "dot"},
        {"lattice", twin, "--format", "dot"},
        {"lattice", twin, "--format", "json"},
        {"lattice", rnd, "--format", "dot"},
        {"join", lad, "--left", "x11,x23", "--right", "x13,x21,x22"},
        {"join", twin, "--left", "y11,y12,y21", "--right", "y11,y12,y22"},
        {"meet", lad, "--left", "x11,x12,x23", "--right", "x21,x22"},
        {"tarski", lad, "--from", "x21,x22", "--trace"},
        {"tarski", lad, "--from", ""},
        {"vacancy-chain", lad, "--stable", "x13,x21,x22", "--retire", "d1", "--trace"},
        {"vacancy-chain", lad, "--stable", "x11,x12,x23", "--retire", "d2"},
        {"verify-lad", lad, "--from", "x11,x23"},
        {"verify-lad", rnd, "--from", ""},
        {"check", lad, "--allocation", "nope"},
    };
    for (const auto& args : commands) {
        std::string label;
        for (const auto& a : args) label += (label.empty() ? "" : " ") + std::filesystem::path(a).filename().string();
        const auto first = invoke(args, dir);
        std::string produced;
        if (args[0] == "random") produced = cli::read_file(rnd);
        const auto second = invoke(args, dir);
        c.expect(first == second, label + ": identical exit code, stdout and stderr");
        if (args[0] == "random") c.expect(cli::read_file(rnd) == produced, label + ": identical market file");
        c.expect(!first.out.empty(), label + ": produced output");
    }
    c.note(std::to_string(commands.size()) + " invocations, each run twice");
    std::filesystem::remove_all(dir);
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    Criterion c1(1, "golden LAD counterexample reproduced exactly");
    Criterion c2(2, "twin-contract market reconciled against its reference lattice");
    Criterion c3(3, "lattice, operator and LAD properties on " + std::to_string(kPropertyMarkets) + " random markets");
    Criterion c4(4, "DFS enumeration equals the raw subset filter for all four classes");
    Criterion c5(5, "vacancy chains re-equilibrate on " + std::to_string(kVacancyMarkets) + " random markets");
    Criterion c6(6, "CLI output is byte-deterministic");

    auto guarded = [](Criterion& c, auto&& body) {
        try {
            body();
        } catch (const std::exception& e) {
            c.expect(false, std::string("unexpected exception: ") + e.what());
        }
    };
    PropertyTally tally;
    guarded(c1, [&] { golden_counterexample(c1); });
    guarded(c2, [&] { twin_reconciliation(c2); });
    guarded(c3, [&] { property_suite(c3, c4, tally); });
    c3.note(std::to_string(tally.markets) + " markets, " + std::to_string(tally.envy_free) + " envy-free allocations, " +
            std::to_string(tally.pairs) + " ordered pairs, largest lattice " + std::to_string(tally.max_nodes) + " nodes");
    guarded(c5, [&] { vacancy_chains(c5); });
    guarded(c6, [&] { cli_determinism(c6); });

    bool ok = true;
    for (const auto* c : {&c1, &c2, &c3, &c4, &c5, &c6}) {
        c->report();
        ok = ok && c->passed();
    }
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (ok ? "all criteria passed" : "some criteria FAILED") << " in " << std::fixed;
    std::cout.precision(1);
    std::cout << secs << " s\n";
    return ok ? 0 : 1;
}
