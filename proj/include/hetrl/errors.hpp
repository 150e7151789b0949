#pragma once

#include <stdexcept>
#include <string>

namespace hetrl {

/// Table dimensions that do not line up (policy vs. MDP, counts vs. model, ...).
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// A value that violates a documented precondition (negative probability,
/// sigma <= 0, K < 1, ...).
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Data that is internally inconsistent, e.g. two rewards observed for one
/// (h, s, a) of a deterministic-reward source.
class DataIntegrityError : public std::runtime_error {
public:
    explicit DataIntegrityError(const std::string& what) : std::runtime_error(what) {}
};

/// Random generation that could not satisfy its constraints.
class GenerationError : public std::runtime_error {
public:
    explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hetrl
