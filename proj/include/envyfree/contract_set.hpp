#ifndef ENVYFREE_CONTRACT_SET_HPP
#define ENVYFREE_CONTRACT_SET_HPP

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

namespace envyfree {

/// A set of contracts, stored as a bitset over the market's contract indices.
///
/// Trailing zero words are trimmed after every mutation so that two sets with
/// the same members always compare equal regardless of how they were built.
class ContractSet {
public:
    ContractSet() = default;
    ContractSet(std::initializer_list<std::size_t> members) {
        for (auto m : members) insert(m);
    }

    static ContractSet from_indices(const std::vector<std::size_t>& members) {
        ContractSet s;
        for (auto m : members) s.insert(m);
        return s;
    }

    void insert(std::size_t i) {
        const auto w = i / kBits;
        if (w >= words_.size()) words_.resize(w + 1, 0);
        words_[w] |= bit(i);
    }

    void erase(std::size_t i) {
        const auto w = i / kBits;
        if (w >= words_.size()) return;
        words_[w] &= ~bit(i);
        trim();
    }

    bool contains(std::size_t i) const {
        const auto w = i / kBits;
        return w < words_.size() && (words_[w] & bit(i)) != 0;
    }

    bool empty() const noexcept { return words_.empty(); }

    std::size_t size() const noexcept {
        std::size_t n = 0;
        for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }

    bool is_subset_of(const ContractSet& other) const {
        if (words_.size() > other.words_.size()) return false;
        for (std::size_t i = 0; i < words_.size(); ++i)
            if ((words_[i] & ~other.words_[i]) != 0) return false;
        return true;
    }

    bool intersects(const ContractSet& other) const {
        const auto n = std::min(words_.size(), other.words_.size());
        for (std::size_t i = 0; i < n; ++i)
            if ((words_[i] & other.words_[i]) != 0) return true;
        return false;
    }

    template <typename F>
    void for_each(F&& f) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            auto word = words_[w];
            while (word != 0) {
                const auto b = static_cast<std::size_t>(std::countr_zero(word));
                std::invoke(f, w * kBits + b);
                word &= word - 1;
            }
        }
    }

    std::vector<std::size_t> indices() const {
        std::vector<std::size_t> out;
        out.reserve(size());
        for_each([&](std::size_t i) { out.push_back(i); });
        return out;
    }

    ContractSet& operator|=(const ContractSet& o) {
        if (o.words_.size() > words_.size()) words_.resize(o.words_.size(), 0);
        for (std::size_t i = 0; i < o.words_.size(); ++i) words_[i] |= o.words_[i];
        return *this;
    }

    ContractSet& operator&=(const ContractSet& o) {
        if (words_.size() > o.words_.size()) words_.resize(o.words_.size());
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
        trim();
        return *this;
    }

    ContractSet& operator-=(const ContractSet& o) {
        const auto n = std::min(words_.size(), o.words_.size());
        for (std::size_t i = 0; i < n; ++i) words_[i] &= ~o.words_[i];
        trim();
        return *this;
    }

    friend ContractSet operator|(ContractSet a, const ContractSet& b) { return a |= b; }
    friend ContractSet operator&(ContractSet a, const ContractSet& b) { return a &= b; }
    friend ContractSet operator-(ContractSet a, const ContractSet& b) { return a -= b; }

    friend bool operator==(const ContractSet&, const ContractSet&) = default;

    // Index-based order (size first). Only used for containers; user-facing
    // orderings go through Market::canonical_less.
    friend bool operator<(const ContractSet& a, const ContractSet& b) {
        const auto sa = a.size(), sb = b.size();
        if (sa != sb) return sa < sb;
        return a.indices() < b.indices();
    }

    std::size_t hash() const noexcept {
        std::size_t h = 0xcbf29ce484222325ULL;
        for (auto w : words_) {
            h ^= static_cast<std::size_t>(w);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

private:
    static constexpr std::size_t kBits = 64;
    static std::uint64_t bit(std::size_t i) { return std::uint64_t{1} << (i % kBits); }

    void trim() {
        while (!words_.empty() && words_.back() == 0) words_.pop_back();
    }

    std::vector<std::uint64_t> words_;
};

struct ContractSetHash {
    std::size_t operator()(const ContractSet& s) const noexcept { return s.hash(); }
};

} // namespace envyfree

#endif
