#ifndef ENVYFREE_GENERATE_HPP
#define ENVYFREE_GENERATE_HPP

#include "envyfree/errors.hpp"
#include "envyfree/market.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace envyfree {

struct GenParams {
    std::size_t doctors = 2;
    std::size_t hospitals = 2;
    std::size_t contracts = 4;
    std::size_t doctor_quota_min = 1;
    std::size_t doctor_quota_max = 2;
    std::size_t hospital_quota_min = 1;
    std::size_t hospital_quota_max = 2;
    double acceptability = 0.8; // per contract, independently for each side
    std::uint64_t seed = 0;
};

namespace detail {

// std::uniform_*_distribution is implementation-defined; markets must be
// byte-identical across standard libraries for a given seed.
inline std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do v = rng();
    while (v >= limit);
    return static_cast<std::size_t>(v % bound);
}

inline std::size_t uniform_between(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return lo + uniform_below(rng, hi - lo + 1);
}

inline bool bernoulli(std::mt19937_64& rng, double p) {
    if (p >= 1.0) return true;
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p;
}

template <typename T>
void shuffle(std::mt19937_64& rng, std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

} // namespace detail

inline void check_params(const GenParams& p) {
    if (p.doctors < 1 || p.hospitals < 1 || p.contracts < 1)
        throw PreconditionError("generator needs at least one doctor, hospital and contract");
    if (p.doctor_quota_min < 1 || p.doctor_quota_min > p.doctor_quota_max)
        throw PreconditionError("doctor quota range must satisfy 1 <= min <= max");
    if (p.hospital_quota_min < 1 || p.hospital_quota_min > p.hospital_quota_max)
        throw PreconditionError("hospital quota range must satisfy 1 <= min <= max");
    if (!(p.acceptability > 0.0 && p.acceptability <= 1.0))
        throw PreconditionError("acceptability probability must lie in (0, 1]");
}

/// Random market whose doctors are all responsive (hence substitutable,
/// consistent and LAD). Deterministic in `seed`.
inline MarketSpec generate_responsive_market(const GenParams& p) {
    check_params(p);
    std::mt19937_64 rng(p.seed);
    MarketSpec spec;

    std::vector<std::vector<std::string>> by_doctor(p.doctors), by_hospital(p.hospitals);
    for (std::size_t k = 0; k < p.contracts; ++k) {
        const auto d = detail::uniform_below(rng, p.doctors);
        const auto h = detail::uniform_below(rng, p.hospitals);
        ContractSpec c{"c" + std::to_string(k + 1), "d" + std::to_string(d + 1), "h" + std::to_string(h + 1)};
        by_doctor[d].push_back(c.id);
        by_hospital[h].push_back(c.id);
        spec.contracts.push_back(std::move(c));
    }

    for (std::size_t h = 0; h < p.hospitals; ++h) {
        HospitalSpec hs;
        hs.id = "h" + std::to_string(h + 1);
        hs.quota = static_cast<long long>(detail::uniform_between(rng, p.hospital_quota_min, p.hospital_quota_max));
        auto ranking = by_hospital[h];
        detail::shuffle(rng, ranking);
        for (auto& id : ranking)
            if (detail::bernoulli(rng, p.acceptability)) hs.ranking.push_back(std::move(id));
        spec.hospitals.push_back(std::move(hs));
    }

    for (std::size_t d = 0; d < p.doctors; ++d) {
        ResponsiveDoctorSpec rs;
        rs.quota = static_cast<long long>(detail::uniform_between(rng, p.doctor_quota_min, p.doctor_quota_max));
        auto ranking = by_doctor[d];
        detail::shuffle(rng, ranking);
        for (auto& id : ranking)
            if (detail::bernoulli(rng, p.acceptability)) rs.ranking.push_back(std::move(id));
        spec.doctors.push_back(DoctorSpec{"d" + std::to_string(d + 1), std::move(rs)});
    }
    return spec;
}

} // namespace envyfree

#endif
