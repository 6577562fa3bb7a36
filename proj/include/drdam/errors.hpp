#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drdam {

/// Dimension disagreement between an argument and the object it is applied to.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed byte stream; `offset` is the position at which parsing failed.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Non-finite energy or gradient encountered while iterating the dynamics;
/// `step` is the update index at which the value became non-finite.
class DescentError : public std::runtime_error {
public:
    DescentError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

} // namespace drdam
