#pragma once

#include <stdexcept>
#include <string>

namespace armour {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Values outside a declared domain: k outside [-1,1], t outside the horizon, bad indices.
struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct IdCollisionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A PZ lacks the structure an operation needs (e.g. mixed exponents passed to pz_grad_k).
struct StructureError : std::logic_error {
    using std::logic_error::logic_error;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model/scene file problems. what() carries the offending field path.
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : ModelError {
    using ModelError::ModelError;
};

// Flat or empty sets where a full-dimensional one is required.
struct DegeneracyError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Random scene generation ran out of attempts.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace armour
