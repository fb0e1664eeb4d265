#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cleanbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, unknown columns, invalid parameters.
class InputError : public Error {
public:
    using Error::Error;
};

/// A computation that cannot proceed on the given data (singular system, too few rows, ...).
class DataError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public Error {
public:
    using Error::Error;
};

using Rng = std::mt19937_64;

/// Mixes a master seed with a tag and an index into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Strict parse: the whole string must be a finite decimal number.
std::optional<double> parse_number(std::string_view text);

/// Cooperative per-thread deadline. Long-running kernels call check_deadline()
/// and throw TimeoutError once the deadline installed by DeadlineScope passes.
class DeadlineScope {
public:
    explicit DeadlineScope(std::optional<std::chrono::steady_clock::time_point> deadline);
    ~DeadlineScope();
    DeadlineScope(const DeadlineScope&) = delete;
    DeadlineScope& operator=(const DeadlineScope&) = delete;

private:
    std::optional<std::chrono::steady_clock::time_point> previous_;
};

bool deadline_passed();
void check_deadline();
std::optional<std::chrono::steady_clock::time_point> current_deadline();

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace cleanbench
