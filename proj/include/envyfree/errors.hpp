#ifndef ENVYFREE_ERRORS_HPP
#define ENVYFREE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace envyfree {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// Malformed market document (bad JSON, wrong field types, empty input).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what_arg) : Error(what_arg) {}
};

// Dangling or duplicate ids, incomplete choice tables, ill-formed rankings.
class StructuralError : public Error {
public:
    explicit StructuralError(std::vector<std::string> problems)
        : Error(join_problems(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join_problems(const std::vector<std::string>& problems) {
        std::string msg = "market is structurally invalid";
        for (const auto& p : problems) {
            msg += "\n  - ";
            msg += p;
        }
        return msg;
    }

    std::vector<std::string> problems_;
};

// An operation was called on an input outside its domain (non-allocation,
// non-envy-free allocation, unknown id, ...).
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what_arg) : Error(what_arg) {}
};

class CapExceeded : public Error {
public:
    CapExceeded(const std::string& what_arg, std::size_t cap) : Error(what_arg), cap_(cap) {}
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t cap_;
};

// The market violates a model axiom in a way only observable at solve time:
// no Blair extremum, non-terminating iteration, a restriction that is not
// envy-free after retirements.
class ModelViolation : public Error {
public:
    explicit ModelViolation(const std::string& what_arg) : Error(what_arg) {}
};

} // namespace envyfree

#endif
