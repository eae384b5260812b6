#pragma once

#include <stdexcept>
#include <string>

namespace infoeff {

/// Bad parameters or mismatched dimensions supplied by the caller.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A formula was evaluated outside its mathematical domain
/// (zero price with positive investment, wrong-sign threshold, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw ValidationError(what);
}

} // namespace infoeff
