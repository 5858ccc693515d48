#pragma once

#include <stdexcept>
#include <string>

namespace nct {

// Error taxonomy shared by all modules.  The CLI maps Kind::precondition to
// exit code 2 and Kind::non_convergence to exit code 3.
class Error : public std::runtime_error {
public:
    enum class Kind { precondition, non_convergence };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct PreconditionError : Error {
    explicit PreconditionError(const std::string& w) : Error(Kind::precondition, w) {}
};

struct OrderTooLarge : Error {
    explicit OrderTooLarge(const std::string& w) : Error(Kind::precondition, w) {}
};

struct UnknownDistribution : Error {
    explicit UnknownDistribution(const std::string& w) : Error(Kind::precondition, w) {}
};

struct InsufficientCuts : Error {
    explicit InsufficientCuts(const std::string& w) : Error(Kind::precondition, w) {}
};

struct RankDeficient : Error {
    explicit RankDeficient(const std::string& w) : Error(Kind::precondition, w) {}
};

struct CutMismatch : Error {
    explicit CutMismatch(const std::string& w) : Error(Kind::precondition, w) {}
};

struct InsufficientSamples : Error {
    explicit InsufficientSamples(const std::string& w) : Error(Kind::precondition, w) {}
};

struct NonConvergence : Error {
    explicit NonConvergence(const std::string& w) : Error(Kind::non_convergence, w) {}
};

// Config validation failure; `pointer` is the JSON-pointer path of the bad field.
struct SchemaError : Error {
    SchemaError(const std::string& pointer, const std::string& message)
        : Error(Kind::precondition, pointer + ": " + message), pointer(pointer) {}
    std::string pointer;
};

}  // namespace nct
