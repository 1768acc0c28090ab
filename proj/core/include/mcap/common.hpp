#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcap {

// Extents of a dense row-major array. Rank 0 denotes a scalar (numel 1).
using Shape = std::vector<std::size_t>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible extents (matmul inner dims, broadcast conflicts, ...).
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid model/run configuration (even conv width, m not dividing dim, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite values or violated numeric preconditions.
class NumericError : public Error {
public:
    using Error::Error;
};

// Malformed input files (CSV, checkpoints, config files).
class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

std::string shape_str(const Shape& s);

std::size_t numel(const Shape& s);

// Row-major element strides; stride of the last dimension is 1.
std::vector<std::size_t> row_major_strides(const Shape& s);

// Trailing-axes broadcast of two shapes; throws ShapeError naming both.
Shape broadcast_shapes(const Shape& a, const Shape& b);

} // namespace mcap
