#ifndef ENVYFREE_TARSKI_HPP
#define ENVYFREE_TARSKI_HPP

#include "envyfree/choice.hpp"
#include "envyfree/contract_set.hpp"
#include "envyfree/errors.hpp"
#include "envyfree/lattice.hpp"
#include "envyfree/market.hpp"
#include "envyfree/solution.hpp"

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace envyfree {

/// Each hospital's best blocking contract (ℬ^Y_⋆). Rankings are strict, so a
/// hospital contributes at most one contract.
inline ContractSet star_blocking(const Market& m, const ContractSet& y) {
    detail::require_envy_free(m, y, "star_blocking");
    const auto blocking = detail::blocking_unchecked(m, y);
    ContractSet out;
    for (const auto& h : m.hospitals()) {
        for (auto x : h.ranking) {
            if (blocking.contains(x)) {
                out.insert(x);
                break;
            }
        }
    }
    return out;
}

struct TarskiStep {
    ContractSet allocation;
    ContractSet blocking;                // ℬ^Y
    ContractSet starred;                 // ℬ^Y_⋆
    std::vector<ContractSet> per_doctor; // ℬ^Y_d, indexed by doctor
};

struct TarskiTrace {
    std::vector<TarskiStep> steps; // steps.back().allocation is the fixed point
    ContractSet fixed_point;
    std::size_t iterations = 0;
};

namespace detail {

inline TarskiStep describe(const Market& m, const ContractSet& y) {
    TarskiStep s;
    s.allocation = y;
    s.blocking = blocking_unchecked(m, y);
    for (const auto& h : m.hospitals()) {
        for (auto x : h.ranking) {
            if (s.blocking.contains(x)) {
                s.starred.insert(x);
                break;
            }
        }
    }
    s.per_doctor.reserve(m.doctors().size());
    for (std::size_t d = 0; d < m.doctors().size(); ++d) s.per_doctor.push_back(restrict_to_doctor(m, s.starred, d));
    return s;
}

inline ContractSet apply(const Market& m, const TarskiStep& s) {
    ContractSet out;
    for (std::size_t d = 0; d < m.doctors().size(); ++d) out |= choose_doctor(m, d, s.allocation | s.per_doctor[d]);
    return out;
}

} // namespace detail

/// 𝒯^Y: each doctor chooses from Y plus the starred blocking contracts
/// naming her.
inline ContractSet tarski_step(const Market& m, const ContractSet& y) {
    detail::require_envy_free(m, y, "tarski_step");
    return detail::apply(m, detail::describe(m, y));
}

inline std::size_t default_iteration_cap(const Market& m) {
    return m.contract_count() * m.doctors().size() + 1;
}

/// Iterates 𝒯 from an envy-free allocation until it stops moving. Every
/// visited allocation is re-checked for envy-freeness; a violation or an
/// exhausted cap means the market broke a choice axiom.
inline TarskiTrace tarski_fixed_point(const Market& m, const ContractSet& y, std::optional<std::size_t> cap = {}) {
    detail::require_envy_free(m, y, "tarski_fixed_point");
    const auto limit = cap.value_or(default_iteration_cap(m));
    TarskiTrace trace;
    trace.steps.push_back(detail::describe(m, y));
    for (;;) {
        auto next = detail::apply(m, trace.steps.back());
        if (next == trace.steps.back().allocation) break;
        if (trace.iterations == limit)
            throw ModelViolation("tarski iteration exceeded its safety cap of " + std::to_string(limit) + " steps");
        if (!is_allocation(m, next) || !detail::is_ir_unchecked(m, next) || !detail::envy_unchecked(m, next).empty())
            throw ModelViolation("tarski step left the envy-free set");
        ++trace.iterations;
        trace.steps.push_back(detail::describe(m, next));
    }
    trace.fixed_point = trace.steps.back().allocation;
    return trace;
}

// ---------------------------------------------------------------------------
// Vacancy chains
// ---------------------------------------------------------------------------

struct RetirementEvent {
    std::vector<std::string> retiring; // doctor ids
    ContractSet before;                // stable in the original market
};

/// Thrown when the surviving contracts of a stable allocation are not
/// envy-free in the reduced market. Carries the witnesses.
class RestrictionNotEnvyFree : public ModelViolation {
public:
    RestrictionNotEnvyFree(Market reduced, ContractSet restriction, std::vector<EnvyWitness> envy, bool ir)
        : ModelViolation("restriction of the stable allocation is not envy-free in the reduced market"),
          reduced_(std::move(reduced)), restriction_(std::move(restriction)), envy_(std::move(envy)), ir_(ir) {}

    const Market& reduced() const noexcept { return reduced_; }
    const ContractSet& restriction() const noexcept { return restriction_; }
    const std::vector<EnvyWitness>& envy() const noexcept { return envy_; }
    bool individually_rational() const noexcept { return ir_; }

private:
    Market reduced_;
    ContractSet restriction_;
    std::vector<EnvyWitness> envy_;
    bool ir_;
};

struct VacancyChainResult {
    Market reduced;
    ContractSet restriction; // indices of the reduced market
    TarskiTrace trace;
};

/// The market without the retiring doctors and every contract naming them.
inline Market remove_doctors(const Market& m, const std::vector<std::string>& retiring) {
    std::set<std::string> gone(retiring.begin(), retiring.end());
    const auto& spec = m.spec();
    MarketSpec out;
    std::set<std::string> dropped_contracts;
    for (const auto& c : spec.contracts) {
        if (gone.count(c.doctor)) dropped_contracts.insert(c.id);
        else out.contracts.push_back(c);
    }
    for (auto h : spec.hospitals) {
        std::erase_if(h.ranking, [&](const std::string& id) { return dropped_contracts.count(id) > 0; });
        out.hospitals.push_back(std::move(h));
    }
    for (const auto& d : spec.doctors)
        if (!gone.count(d.id)) out.doctors.push_back(d);
    return Market::from_spec(std::move(out));
}

inline VacancyChainResult vacancy_chain(const Market& m, const RetirementEvent& event,
                                        std::optional<std::size_t> cap = {}) {
    if (event.retiring.empty()) throw PreconditionError("vacancy_chain: no retiring doctors");
    for (const auto& id : event.retiring) m.doctor_index(id);
    detail::require_allocation(m, event.before, "vacancy_chain");
    if (!detail::is_ir_unchecked(m, event.before) || !detail::blocking_unchecked(m, event.before).empty())
        throw PreconditionError("vacancy_chain: the allocation before retirement is not stable");

    auto reduced = remove_doctors(m, event.retiring);
    ContractSet restriction;
    event.before.for_each([&](std::size_t x) {
        if (auto rx = reduced.find_contract(m.contract(x).id)) restriction.insert(*rx);
    });

    const bool ir = is_allocation(reduced, restriction) && detail::is_ir_unchecked(reduced, restriction);
    auto envy = detail::envy_unchecked(reduced, restriction);
    if (!ir || !envy.empty()) throw RestrictionNotEnvyFree(std::move(reduced), std::move(restriction), std::move(envy), ir);

    auto trace = tarski_fixed_point(reduced, restriction, cap);
    return VacancyChainResult{std::move(reduced), std::move(restriction), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Predictions that hold when every doctor satisfies LAD
// ---------------------------------------------------------------------------

struct CountViolation {
    std::size_t doctor;
    ContractSet stable; // the stable allocation Y'
    std::size_t envy_free_count; // |Y_d|
    std::size_t stable_count;    // |Y'_d|
};

struct RuralViolation {
    AgentKind kind;
    std::size_t agent;
    std::vector<std::size_t> counts; // per stable allocation, in enumeration order
};

/// Observed outcome of the LAD-conditional predictions for one envy-free Y.
/// When `lad_applicable` is false the verdicts are descriptive only.
struct LadReport {
    bool lad_applicable = true;
    std::vector<PropertyWitness> lad_failures;

    ContractSet start;
    ContractSet fixed_point;
    ContractSet hospital_optimal;
    ContractSet join_with_hospital_optimal;
    std::size_t iterations = 0;

    bool fixed_point_is_join = false;        // ℱ^Y = Y ∨ Y^H

    bool dominates_hospital_optimal = false; // Y ⪰_D Y^H
    bool start_is_stable = false;
    bool stable_if_dominating = false;       // Y ⪰_D Y^H ⇒ Y stable

    std::vector<ContractSet> stable_set;
    std::vector<CountViolation> count_violations; // |Y_d| > |Y'_d|
    std::vector<RuralViolation> rural_violations;

    bool counts_bounded() const noexcept { return count_violations.empty(); }
    bool rural_hospitals() const noexcept { return rural_violations.empty(); }
    bool all_hold() const noexcept {
        return fixed_point_is_join && stable_if_dominating && counts_bounded() && rural_hospitals();
    }
};

inline LadReport verify_lad_predictions(const Market& m, const ContractSet& y,
                                               const EnumerationOptions& enum_opt = {},
                                               const ValidationOptions& val_opt = {}) {
    detail::require_envy_free(m, y, "verify_lad_predictions");
    LadReport r;
    r.start = y;
    for (std::size_t d = 0; d < m.doctors().size(); ++d) {
        auto lad = check_lad(m, d, val_opt);
        if (lad.status != CheckStatus::passed) {
            r.lad_applicable = false;
            if (lad.witness) r.lad_failures.push_back(std::move(*lad.witness));
        }
    }

    r.stable_set = enumerate(m, SolutionClass::stable, enum_opt);
    r.hospital_optimal = hospital_optimal(m, r.stable_set);
    const auto trace = tarski_fixed_point(m, y);
    r.fixed_point = trace.fixed_point;
    r.iterations = trace.iterations;
    r.join_with_hospital_optimal = detail::join_unchecked(m, y, r.hospital_optimal);
    r.fixed_point_is_join = r.fixed_point == r.join_with_hospital_optimal;

    r.dominates_hospital_optimal = detail::dominates_unchecked(m, y, r.hospital_optimal);
    r.start_is_stable = detail::blocking_unchecked(m, y).empty();
    r.stable_if_dominating = !r.dominates_hospital_optimal || r.start_is_stable;

    for (std::size_t d = 0; d < m.doctors().size(); ++d) {
        const auto own = restrict_to_doctor(m, y, d).size();
        for (const auto& s : r.stable_set) {
            const auto theirs = restrict_to_doctor(m, s, d).size();
            if (own > theirs) r.count_violations.push_back({d, s, own, theirs});
        }
    }

    auto rural = [&](AgentKind kind, std::size_t agent, const ContractSet& xs) {
        std::vector<std::size_t> counts;
        for (const auto& s : r.stable_set) counts.push_back((s & xs).size());
        for (auto c : counts)
            if (c != counts.front()) {
                r.rural_violations.push_back({kind, agent, counts});
                return;
            }
    };
    for (std::size_t d = 0; d < m.doctors().size(); ++d) rural(AgentKind::doctor, d, m.doctor(d).contract_set);
    for (std::size_t h = 0; h < m.hospitals().size(); ++h) rural(AgentKind::hospital, h, m.hospital(h).contract_set);
    return r;
}

} // namespace envyfree

#endif
