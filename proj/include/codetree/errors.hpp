#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace codetree {

// Error classes map onto the CLI exit codes: 2 bad input, 3 enumeration
// budget exceeded, 4 numeric contract failure, 5 box-counting scale finer
// than the rendered resolution.
enum class errc : int {
    config = 2,
    too_large = 3,
    numeric = 4,
    scale = 5,
};

class Error : public std::runtime_error {
public:
    Error(errc c, std::string msg) : std::runtime_error(std::move(msg)), code_(c) {}
    errc code() const noexcept { return code_; }
    int exit_code() const noexcept { return static_cast<int>(code_); }

private:
    errc code_;
};

#define CODETREE_ERROR(Name, Class)                                        \
    struct Name : Error {                                                   \
        explicit Name(std::string m) : Error(errc::Class, std::move(m)) {}  \
    }

CODETREE_ERROR(ConfigError, config);
CODETREE_ERROR(SchemaError, config);
CODETREE_ERROR(UnknownExample, config);
CODETREE_ERROR(UnknownLabel, config);
CODETREE_ERROR(UnknownSlot, config);
CODETREE_ERROR(InvalidAddress, config);
CODETREE_ERROR(NotStochastic, config);
CODETREE_ERROR(NotErgodic, config);
CODETREE_ERROR(BadDistribution, config);
CODETREE_ERROR(BadRatio, config);

CODETREE_ERROR(EnumerationTooLarge, too_large);

CODETREE_ERROR(NumericError, numeric);
CODETREE_ERROR(SingularMatrix, numeric);
CODETREE_ERROR(NegativeAlpha, numeric);
CODETREE_ERROR(AlphaOutOfRange, numeric);
CODETREE_ERROR(DimensionUnsupported, numeric);
CODETREE_ERROR(NotDecreasing, numeric);
CODETREE_ERROR(NoSignChange, numeric);
CODETREE_ERROR(NotSimilarity, numeric);
CODETREE_ERROR(NotNecked, numeric);

CODETREE_ERROR(ScaleTooFine, scale);

#undef CODETREE_ERROR

}  // namespace codetree
