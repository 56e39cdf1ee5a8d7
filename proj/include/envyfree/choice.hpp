#ifndef ENVYFREE_CHOICE_HPP
#define ENVYFREE_CHOICE_HPP

#include "envyfree/contract_set.hpp"
#include "envyfree/errors.hpp"
#include "envyfree/market.hpp"

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace envyfree {

// ---------------------------------------------------------------------------
// Choice evaluation
// ---------------------------------------------------------------------------

/// C_d(S). The offer is restricted to X_d first, so C_d(S) = C_d(S_d).
inline ContractSet choose_doctor(const Market& m, std::size_t d, const ContractSet& offer) {
    const auto& doc = m.doctor(d);
    ContractSet out;
    if (const auto* rule = std::get_if<ResponsiveRule>(&doc.rule)) {
        ContractSet taken_hospitals; // indexed by hospital
        std::size_t taken = 0;
        for (auto x : rule->ranking) {
            if (taken == rule->quota) break;
            if (!offer.contains(x)) continue;
            const auto h = m.contract(x).hospital;
            if (taken_hospitals.contains(h)) continue;
            taken_hospitals.insert(h);
            out.insert(x);
            ++taken;
        }
        return out;
    }
    const auto& table = std::get<ChoiceTable>(doc.rule);
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < doc.contracts.size(); ++i)
        if (offer.contains(doc.contracts[i])) mask |= std::uint32_t{1} << i;
    if (mask >= table.chosen.size()) throw ModelViolation("choice table row missing for doctor '" + doc.id + "'");
    const auto chosen = table.chosen[mask];
    for (std::size_t i = 0; i < doc.contracts.size(); ++i)
        if (chosen & (std::uint32_t{1} << i)) out.insert(doc.contracts[i]);
    return out;
}

/// C_h(S): the min(q_h, #acceptable) best acceptable contracts of S_h.
inline ContractSet choose_hospital(const Market& m, std::size_t h, const ContractSet& offer) {
    const auto& hosp = m.hospital(h);
    ContractSet out;
    std::size_t taken = 0;
    for (auto x : hosp.ranking) {
        if (taken == hosp.quota) break;
        if (offer.contains(x)) {
            out.insert(x);
            ++taken;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Axiom checkers
// ---------------------------------------------------------------------------

enum class Property { distinct_hospitals, substitutability, consistency, path_independence, lad };

inline const char* property_name(Property p) {
    switch (p) {
    case Property::distinct_hospitals: return "distinct-hospitals";
    case Property::substitutability: return "substitutability";
    case Property::consistency: return "consistency";
    case Property::path_independence: return "path-independence";
    case Property::lad: return "lad";
    }
    return "?";
}

/// A concrete counterexample.
///
/// - distinct-hospitals: subsets {Y}, choices {C(Y)}
/// - substitutability:   subsets {Y, Y'} with Y' ⊆ Y, choices {C(Y), C(Y')};
///                       C(Y) ∩ Y' ⊄ C(Y')
/// - consistency:        subsets {Y, Y'} with C(Y) ⊆ Y' ⊆ Y, choices {C(Y), C(Y')};
///                       C(Y') ≠ C(Y)
/// - path-independence:  subsets {Y, Y'}, choices {C(Y ∪ Y'), C(C(Y) ∪ Y')}; unequal
/// - lad:                subsets {Y, Y'} with Y' ⊆ Y, choices {C(Y), C(Y')};
///                       |C(Y')| > |C(Y)|
struct PropertyWitness {
    Property property;
    std::size_t doctor;
    std::vector<ContractSet> subsets;
    std::vector<ContractSet> choices;
};

/// Re-evaluates the witness through choose_doctor and reports whether the
/// violation it describes actually occurs.
inline bool witness_reproduces(const Market& m, const PropertyWitness& w) {
    auto C = [&](const ContractSet& s) { return choose_doctor(m, w.doctor, s); };
    if (w.subsets.empty()) return false;
    const auto& y = w.subsets[0];
    switch (w.property) {
    case Property::distinct_hospitals: {
        const auto c = C(y);
        if (c != w.choices.at(0)) return false;
        if (!c.is_subset_of(y & m.doctor(w.doctor).contract_set)) return true;
        ContractSet hospitals;
        bool clash = false;
        c.for_each([&](std::size_t x) {
            const auto h = m.contract(x).hospital;
            if (hospitals.contains(h)) clash = true;
            hospitals.insert(h);
        });
        return clash;
    }
    case Property::substitutability: {
        const auto& yp = w.subsets.at(1);
        return yp.is_subset_of(y) && !(C(y) & yp).is_subset_of(C(yp));
    }
    case Property::consistency: {
        const auto& yp = w.subsets.at(1);
        const auto cy = C(y);
        return cy.is_subset_of(yp) && yp.is_subset_of(y) && C(yp) != cy;
    }
    case Property::path_independence: {
        const auto& yp = w.subsets.at(1);
        return C(y | yp) != C(C(y) | yp);
    }
    case Property::lad: {
        const auto& yp = w.subsets.at(1);
        return yp.is_subset_of(y) && C(yp).size() > C(y).size();
    }
    }
    return false;
}

struct ValidationOptions {
    // Agents with more contracts than this are checked on random samples.
    std::size_t exhaustive_cap = 16;
    std::size_t samples = 4096;
    // Path independence ranges over pairs; exhaustive only when 4^|X_d| fits.
    std::uint64_t pair_budget = std::uint64_t{1} << 22;
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

enum class CheckStatus { passed, failed, skipped };

struct CheckResult {
    Property property;
    CheckStatus status = CheckStatus::passed;
    bool sampled = false;
    std::optional<PropertyWitness> witness;
    std::string note;

    bool passed() const noexcept { return status == CheckStatus::passed; }
};

namespace detail {

inline constexpr std::size_t kMaxLocalContracts = 64;

// C_d over local masks of X_d (bit i = doctor.contracts[i]).
class LocalChooser {
public:
    LocalChooser(const Market& m, std::size_t d, bool materialize) : m_(m), d_(d) {
        const auto& doc = m.doctor(d);
        n_ = doc.contracts.size();
        if (const auto* t = std::get_if<ChoiceTable>(&doc.rule)) {
            table_.assign(t->chosen.begin(), t->chosen.end());
        } else if (materialize) {
            table_.resize(std::size_t{1} << n_);
            for (std::uint64_t mask = 0; mask < table_.size(); ++mask) table_[mask] = evaluate(mask);
        }
    }

    std::size_t size() const noexcept { return n_; }
    std::uint64_t full() const noexcept { return n_ == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n_) - 1; }

    std::uint64_t operator()(std::uint64_t mask) const {
        if (!table_.empty()) return table_[mask];
        return evaluate(mask);
    }

    ContractSet to_set(std::uint64_t mask) const {
        ContractSet s;
        const auto& xs = m_.doctor(d_).contracts;
        for (std::size_t i = 0; i < n_; ++i)
            if (mask & (std::uint64_t{1} << i)) s.insert(xs[i]);
        return s;
    }

private:
    std::uint64_t evaluate(std::uint64_t mask) const {
        const auto& xs = m_.doctor(d_).contracts;
        const auto chosen = choose_doctor(m_, d_, to_set(mask));
        std::uint64_t out = 0;
        for (std::size_t i = 0; i < n_; ++i)
            if (chosen.contains(xs[i])) out |= std::uint64_t{1} << i;
        return out;
    }

    const Market& m_;
    std::size_t d_;
    std::size_t n_ = 0;
    std::vector<std::uint64_t> table_;
};

// Runs `visit(Y)` over every local offer set (or a seeded sample) until it
// returns a witness.
template <typename Visit>
CheckResult sweep(const Market& m, std::size_t d, Property p, const ValidationOptions& opt, Visit&& visit) {
    CheckResult r;
    r.property = p;
    const auto n = m.doctor(d).contracts.size();
    if (n > kMaxLocalContracts) {
        r.status = CheckStatus::skipped;
        r.note = "doctor names more than 64 contracts";
        return r;
    }
    const bool exhaustive = n <= opt.exhaustive_cap;
    LocalChooser C(m, d, exhaustive);
    std::optional<PropertyWitness> w;
    if (exhaustive) {
        const std::uint64_t rows = std::uint64_t{1} << n;
        for (std::uint64_t y = 0; y < rows && !w; ++y) w = visit(C, y);
    } else {
        r.sampled = true;
        std::mt19937_64 rng(opt.seed ^ (0x100000001b3ULL * (d + 1)));
        for (std::size_t k = 0; k < opt.samples && !w; ++k) w = visit(C, rng() & C.full());
    }
    if (w) {
        r.status = CheckStatus::failed;
        r.witness = std::move(w);
    }
    return r;
}

inline PropertyWitness make_witness(Property p, std::size_t d, const LocalChooser& C,
                                    std::vector<std::uint64_t> subsets, std::vector<std::uint64_t> choices) {
    PropertyWitness w{p, d, {}, {}};
    for (auto s : subsets) w.subsets.push_back(C.to_set(s));
    for (auto c : choices) w.choices.push_back(C.to_set(c));
    return w;
}

} // namespace detail

/// Property (i): C_d(Y) ⊆ Y_d and chosen contracts name distinct hospitals.
inline CheckResult check_distinct_hospitals(const Market& m, std::size_t d, const ValidationOptions& opt = {}) {
    const auto& doc = m.doctor(d);
    return detail::sweep(m, d, Property::distinct_hospitals, opt,
                         [&](const detail::LocalChooser& C, std::uint64_t y) -> std::optional<PropertyWitness> {
                             const auto c = C(y);
                             bool bad = (c & ~y) != 0;
                             ContractSet hospitals;
                             for (std::size_t i = 0; i < C.size() && !bad; ++i) {
                                 if (!(c & (std::uint64_t{1} << i))) continue;
                                 const auto h = m.contract(doc.contracts[i]).hospital;
                                 bad = hospitals.contains(h);
                                 hospitals.insert(h);
                             }
                             if (!bad) return std::nullopt;
                             return detail::make_witness(Property::distinct_hospitals, d, C, {y}, {c});
                         });
}

/// C_d(Y) ∩ Y' ⊆ C_d(Y') for Y' ⊆ Y. Single-element removals suffice: a
/// longer removal chain composes the one-step inclusions.
inline CheckResult check_substitutable(const Market& m, std::size_t d, const ValidationOptions& opt = {}) {
    return detail::sweep(m, d, Property::substitutability, opt,
                         [&](const detail::LocalChooser& C, std::uint64_t y) -> std::optional<PropertyWitness> {
                             const auto cy = C(y);
                             for (auto rest = y; rest != 0; rest &= rest - 1) {
                                 const auto yp = y & ~(rest & (~rest + 1));
                                 const auto cyp = C(yp);
                                 if ((cy & yp & ~cyp) != 0)
                                     return detail::make_witness(Property::substitutability, d, C, {y, yp}, {cy, cyp});
                             }
                             return std::nullopt;
                         });
}

/// C_d(Y') = C_d(Y) whenever C_d(Y) ⊆ Y' ⊆ Y, via removals of unchosen contracts.
inline CheckResult check_consistency(const Market& m, std::size_t d, const ValidationOptions& opt = {}) {
    return detail::sweep(m, d, Property::consistency, opt,
                         [&](const detail::LocalChooser& C, std::uint64_t y) -> std::optional<PropertyWitness> {
                             const auto cy = C(y);
                             for (auto rest = y & ~cy; rest != 0; rest &= rest - 1) {
                                 const auto yp = y & ~(rest & (~rest + 1));
                                 const auto cyp = C(yp);
                                 if (cyp != cy)
                                     return detail::make_witness(Property::consistency, d, C, {y, yp}, {cy, cyp});
                             }
                             return std::nullopt;
                         });
}

/// |C_d(Y')| ≤ |C_d(Y)| for Y' ⊆ Y, via single removals.
inline CheckResult check_lad(const Market& m, std::size_t d, const ValidationOptions& opt = {}) {
    return detail::sweep(m, d, Property::lad, opt,
                         [&](const detail::LocalChooser& C, std::uint64_t y) -> std::optional<PropertyWitness> {
                             const auto cy = C(y);
                             for (auto rest = y; rest != 0; rest &= rest - 1) {
                                 const auto yp = y & ~(rest & (~rest + 1));
                                 const auto cyp = C(yp);
                                 if (std::popcount(cyp) > std::popcount(cy))
                                     return detail::make_witness(Property::lad, d, C, {y, yp}, {cy, cyp});
                             }
                             return std::nullopt;
                         });
}

/// C_d(Y ∪ Y') = C_d(C_d(Y) ∪ Y'). Implied by substitutability and
/// consistency; checked over all pairs only while 4^|X_d| fits the budget.
inline CheckResult check_path_independence(const Market& m, std::size_t d, const ValidationOptions& opt = {}) {
    CheckResult r;
    r.property = Property::path_independence;
    const auto n = m.doctor(d).contracts.size();
    if (n > detail::kMaxLocalContracts) {
        r.status = CheckStatus::skipped;
        r.note = "doctor names more than 64 contracts";
        return r;
    }
    const bool exhaustive = 2 * n < 64 && (std::uint64_t{1} << (2 * n)) <= opt.pair_budget;
    detail::LocalChooser C(m, d, n <= opt.exhaustive_cap);
    auto test = [&](std::uint64_t y, std::uint64_t yp) -> bool {
        const auto lhs = C(y | yp);
        const auto rhs = C(C(y) | yp);
        if (lhs == rhs) return false;
        r.status = CheckStatus::failed;
        r.witness = detail::make_witness(Property::path_independence, d, C, {y, yp}, {lhs, rhs});
        return true;
    };
    if (exhaustive) {
        const std::uint64_t rows = std::uint64_t{1} << n;
        for (std::uint64_t y = 0; y < rows; ++y)
            for (std::uint64_t yp = 0; yp < rows; ++yp)
                if (test(y, yp)) return r;
    } else {
        r.sampled = true;
        std::mt19937_64 rng(opt.seed ^ (0x9e3779b9ULL * (d + 1)));
        for (std::size_t k = 0; k < opt.samples; ++k) {
            const auto y = rng() & C.full();
            const auto yp = rng() & C.full();
            if (test(y, yp)) return r;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Market validation report
// ---------------------------------------------------------------------------

enum class AgentKind { doctor, hospital };

struct CheckEntry {
    std::string property;
    CheckStatus status = CheckStatus::passed;
    bool fatal = true;
    bool sampled = false;
    std::optional<PropertyWitness> witness;
    std::string note;
};

struct AgentReport {
    AgentKind kind;
    std::string id;
    std::vector<CheckEntry> checks;
};

struct ValidationReport {
    std::vector<std::string> structural_errors;
    std::vector<AgentReport> agents;

    bool has_fatal() const {
        if (!structural_errors.empty()) return true;
        for (const auto& a : agents)
            for (const auto& c : a.checks)
                if (c.fatal && c.status == CheckStatus::failed) return true;
        return false;
    }
    bool ok() const { return !has_fatal(); }

    /// True when every doctor's LAD check passed (exhaustively or on samples).
    bool lad_everywhere() const {
        for (const auto& a : agents)
            for (const auto& c : a.checks)
                if (c.property == "lad" && c.status != CheckStatus::passed) return false;
        return structural_errors.empty();
    }
};

inline CheckEntry to_entry(CheckResult r, bool fatal) {
    return CheckEntry{property_name(r.property), r.status, fatal, r.sampled, std::move(r.witness), std::move(r.note)};
}

/// Agents naming no contract are omitted: every check on them is vacuous.
inline ValidationReport validate_market(const Market& m, const ValidationOptions& opt = {}) {
    ValidationReport rep;
    for (std::size_t d = 0; d < m.doctors().size(); ++d) {
        if (m.doctor(d).contracts.empty()) continue;
        AgentReport a{AgentKind::doctor, m.doctor(d).id, {}};
        a.checks.push_back(to_entry(check_distinct_hospitals(m, d, opt), true));
        a.checks.push_back(to_entry(check_substitutable(m, d, opt), true));
        a.checks.push_back(to_entry(check_consistency(m, d, opt), true));
        auto pi = to_entry(check_path_independence(m, d, opt), true);
        pi.note = pi.note.empty() ? "derived: implied by substitutability and consistency" : pi.note;
        a.checks.push_back(std::move(pi));
        a.checks.push_back(to_entry(check_lad(m, d, opt), false));
        rep.agents.push_back(std::move(a));
    }
    for (std::size_t h = 0; h < m.hospitals().size(); ++h) {
        if (m.hospital(h).contracts.empty()) continue;
        // Structural problems in a ranking abort construction, so a built
        // market always has well-formed rankings.
        AgentReport a{AgentKind::hospital, m.hospital(h).id, {}};
        a.checks.push_back(CheckEntry{"ranking", CheckStatus::passed, true, false, std::nullopt, {}});
        rep.agents.push_back(std::move(a));
    }
    return rep;
}

inline ValidationReport validate_market(const MarketSpec& spec, const ValidationOptions& opt = {}) {
    try {
        return validate_market(Market::from_spec(spec), opt);
    } catch (const StructuralError& e) {
        ValidationReport rep;
        rep.structural_errors = e.problems();
        return rep;
    }
}

} // namespace envyfree

#endif
