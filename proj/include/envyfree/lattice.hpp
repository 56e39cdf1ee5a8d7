#ifndef ENVYFREE_LATTICE_HPP
#define ENVYFREE_LATTICE_HPP

#include "envyfree/choice.hpp"
#include "envyfree/contract_set.hpp"
#include "envyfree/errors.hpp"
#include "envyfree/market.hpp"
#include "envyfree/solution.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace envyfree {

enum class Dominance { weak, strict };

namespace detail {

// Y ⪰_D Y' iff Y_d = C_d(Y ∪ Y') for every doctor.
inline bool dominates_unchecked(const Market& m, const ContractSet& y, const ContractSet& yp) {
    const auto both = y | yp;
    for (std::size_t d = 0; d < m.doctors().size(); ++d)
        if (choose_doctor(m, d, both) != restrict_to_doctor(m, y, d)) return false;
    return true;
}

inline ContractSet join_unchecked(const Market& m, const ContractSet& y, const ContractSet& yp) {
    const auto both = y | yp;
    ContractSet out;
    for (std::size_t d = 0; d < m.doctors().size(); ++d) out |= choose_doctor(m, d, both);
    return out;
}

inline void require_ir(const Market& m, const ContractSet& y, const char* op) {
    if (!is_allocation(m, y) || !is_ir_unchecked(m, y))
        throw PreconditionError(std::string(op) + ": input is not an individually rational allocation");
}

inline void require_envy_free(const Market& m, const ContractSet& y, const char* op) {
    if (!is_allocation(m, y) || !is_ir_unchecked(m, y) || !envy_unchecked(m, y).empty())
        throw PreconditionError(std::string(op) + ": input is not an envy-free allocation");
}

} // namespace detail

/// Weak (Y ⪰_D Y') or strict (additionally Y ≠ Y') Blair dominance.
/// Defined on individually rational allocations only.
inline bool blair_dominates(const Market& m, const ContractSet& y, const ContractSet& yp,
                            Dominance kind = Dominance::weak) {
    detail::require_ir(m, y, "blair_dominates");
    detail::require_ir(m, yp, "blair_dominates");
    if (kind == Dominance::strict && y == yp) return false;
    return detail::dominates_unchecked(m, y, yp);
}

/// The join construction without its envy-free precondition: every doctor
/// chooses from Y ∪ Y' and hospitals keep whatever their doctors sign. Only
/// guaranteed to be an allocation (let alone the join) on envy-free inputs.
inline ContractSet choose_from_union(const Market& m, const ContractSet& y, const ContractSet& yp) {
    return detail::join_unchecked(m, y, yp);
}

/// Y ∨ Y': each doctor chooses from the union of both allocations.
inline ContractSet join(const Market& m, const ContractSet& y, const ContractSet& yp) {
    detail::require_envy_free(m, y, "join");
    detail::require_envy_free(m, yp, "join");
    return detail::join_unchecked(m, y, yp);
}

/// Greatest lower bound within a complete enumeration of the envy-free set:
/// the join of all common lower bounds.
inline ContractSet meet(const Market& m, const ContractSet& y, const ContractSet& yp,
                        const std::vector<ContractSet>& envy_free_set) {
    const auto has = [&](const ContractSet& s) {
        return std::find(envy_free_set.begin(), envy_free_set.end(), s) != envy_free_set.end();
    };
    if (!has(y) || !has(yp)) throw PreconditionError("meet: operand missing from the envy-free set");
    if (!has(ContractSet{})) throw PreconditionError("meet: envy-free set lacks the empty allocation, so it is incomplete");

    ContractSet acc;
    for (const auto& z : envy_free_set)
        if (detail::dominates_unchecked(m, y, z) && detail::dominates_unchecked(m, yp, z))
            acc = detail::join_unchecked(m, acc, z);
    if (!detail::dominates_unchecked(m, y, acc) || !detail::dominates_unchecked(m, yp, acc))
        throw ModelViolation("meet: join of the common lower bounds is not a lower bound");
    return acc;
}

// ---------------------------------------------------------------------------
// Hasse diagram
// ---------------------------------------------------------------------------

struct LatticeGraph {
    std::vector<ContractSet> nodes;                        // canonical order
    std::vector<std::pair<std::size_t, std::size_t>> covers; // (lower, upper)
    std::vector<bool> stable_mask;
    std::size_t bottom = 0;
    std::vector<std::size_t> height;                       // longest chain from bottom
};

/// Builds the cover relation of ⪰_D over a given set of IR allocations.
inline LatticeGraph hasse_of(const Market& m, std::vector<ContractSet> nodes) {
    m.canonical_sort(nodes);
    LatticeGraph g;
    const auto n = nodes.size();
    // above[i][j]: nodes[i] ⪰_D nodes[j]
    std::vector<std::vector<bool>> above(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) above[i][j] = i == j || detail::dominates_unchecked(m, nodes[i], nodes[j]);

    for (std::size_t lo = 0; lo < n; ++lo) {
        for (std::size_t up = 0; up < n; ++up) {
            if (lo == up || !above[up][lo]) continue;
            bool direct = true;
            for (std::size_t k = 0; k < n && direct; ++k)
                if (k != lo && k != up && above[up][k] && above[k][lo]) direct = false;
            if (direct) g.covers.emplace_back(lo, up);
        }
    }
    std::sort(g.covers.begin(), g.covers.end());

    g.stable_mask.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        g.stable_mask[i] = detail::is_ir_unchecked(m, nodes[i]) && detail::blocking_unchecked(m, nodes[i]).empty();

    const auto it = std::find(nodes.begin(), nodes.end(), ContractSet{});
    g.bottom = it == nodes.end() ? 0 : static_cast<std::size_t>(it - nodes.begin());

    // A cover can shrink an allocation, so canonical order is not topological.
    g.height.assign(n, 0);
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& [lo, up] : g.covers)
            if (g.height[up] < g.height[lo] + 1) {
                g.height[up] = g.height[lo] + 1;
                changed = true;
            }
    }
    g.nodes = std::move(nodes);
    return g;
}

/// The envy-free lattice of the market with Blair covers and stable flags.
inline LatticeGraph hasse(const Market& m, const EnumerationOptions& opt = {}) {
    return hasse_of(m, enumerate(m, SolutionClass::envy_free, opt));
}

// ---------------------------------------------------------------------------
// Extremal stable allocations
// ---------------------------------------------------------------------------

namespace detail {

inline ContractSet stable_extremum(const Market& m, const std::vector<ContractSet>& stable, bool maximum) {
    if (stable.empty()) throw ModelViolation("no Blair-extremum in stable set: the stable set is empty");
    for (const auto& candidate : stable) {
        bool extremal = true;
        for (const auto& other : stable) {
            const bool ok = maximum ? dominates_unchecked(m, candidate, other) : dominates_unchecked(m, other, candidate);
            if (!ok) {
                extremal = false;
                break;
            }
        }
        if (extremal) return candidate;
    }
    throw ModelViolation(std::string("no Blair-extremum in stable set: no ") +
                         (maximum ? "maximum (doctor-optimal)" : "minimum (hospital-optimal)") + " exists");
}

} // namespace detail

/// Y^D, the ⪰_D-maximum of the given (complete) stable set.
inline ContractSet doctor_optimal(const Market& m, const std::vector<ContractSet>& stable) {
    return detail::stable_extremum(m, stable, true);
}

/// Y^H, the ⪰_D-minimum of the given (complete) stable set.
inline ContractSet hospital_optimal(const Market& m, const std::vector<ContractSet>& stable) {
    return detail::stable_extremum(m, stable, false);
}

inline ContractSet doctor_optimal(const Market& m, const EnumerationOptions& opt = {}) {
    return doctor_optimal(m, enumerate(m, SolutionClass::stable, opt));
}

inline ContractSet hospital_optimal(const Market& m, const EnumerationOptions& opt = {}) {
    return hospital_optimal(m, enumerate(m, SolutionClass::stable, opt));
}

} // namespace envyfree

#endif
