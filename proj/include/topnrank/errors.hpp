#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace topnrank {

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Input that parses but violates a data contract (duplicates, empty sets,
/// mismatched id spaces).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A predicted score left the finite, bounded range during training.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t user, double score, std::optional<std::size_t> iteration = std::nullopt)
        : std::runtime_error(message(user, score, iteration)),
          user_(user), score_(score), iteration_(iteration) {}

    std::size_t user() const { return user_; }
    double score() const { return score_; }
    /// Zero-based index of the iteration that diverged, if known.
    std::optional<std::size_t> iteration() const { return iteration_; }

private:
    static std::string message(std::size_t user, double score, std::optional<std::size_t> iteration) {
        std::string msg = "training diverged at user " + std::to_string(user) +
                          " (score " + std::to_string(score) + ")";
        if (iteration) {
            msg += " during iteration " + std::to_string(*iteration);
            msg += *iteration == 0 ? ", no completed iteration"
                                   : ", last good iteration " + std::to_string(*iteration - 1);
        }
        return msg;
    }

    std::size_t user_;
    double score_;
    std::optional<std::size_t> iteration_;
};

} // namespace topnrank
