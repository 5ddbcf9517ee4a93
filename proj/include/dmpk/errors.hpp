#pragma once

#include <stdexcept>
#include <string>

namespace dmpk {

/// Input matrix has the wrong shape (non-square or odd dimension).
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite entries or other floating-point breakdown.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Matrix fails a group-membership requirement (pseudo-unitarity).
class GroupMembershipError : public std::runtime_error {
public:
    explicit GroupMembershipError(const std::string& what) : std::runtime_error(what) {}
};

/// A caller violated an operation contract (missing data, bad combination).
class ContractError : public std::invalid_argument {
public:
    explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

/// Transmission eigenvalues too close for the singular pairwise denominators.
class DegeneracyError : public std::runtime_error {
public:
    explicit DegeneracyError(const std::string& what) : std::runtime_error(what) {}
};

/// Requested symmetry class is not supported by this operation.
class UnsupportedClassError : public std::invalid_argument {
public:
    explicit UnsupportedClassError(const std::string& what) : std::invalid_argument(what) {}
};

/// A run would exceed a configured resource guard.
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

/// Ill-conditioned construction (near-zero velocity, singular hopping).
class ConditioningError : public std::runtime_error {
public:
    explicit ConditioningError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration or CLI usage.
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// The dispersion relation has no real root for some transverse mode.
class EvanescentModeError : public std::domain_error {
public:
    explicit EvanescentModeError(const std::string& what) : std::domain_error(what) {}
};

} // namespace dmpk
