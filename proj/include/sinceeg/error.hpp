#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sinceeg {

/// Tensor extents disagree with what an operation requires.
class ShapeError : public std::invalid_argument {
public:
    ShapeError(std::string op, std::string axis, const std::string& detail)
        : std::invalid_argument(op + ": axis '" + axis + "': " + detail),
          op_(std::move(op)), axis_(std::move(axis)) {}

    const std::string& op() const noexcept { return op_; }
    const std::string& axis() const noexcept { return axis_; }

private:
    std::string op_;
    std::string axis_;
};

/// A model or training configuration violates one of its invariants.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& detail)
        : std::invalid_argument(field + ": " + detail), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A binary artifact (trial container or checkpoint) failed validation.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, std::size_t step)
        : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(step)),
          epoch_(epoch), step_(step) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t epoch_;
    std::size_t step_;
};

}  // namespace sinceeg
