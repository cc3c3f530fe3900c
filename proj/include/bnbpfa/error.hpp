#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bnbpfa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// Argument outside the mathematical domain of a function or sampler.
class DomainError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "domain"; }
};

/// Non-convergence or overflow inside a numerical routine.
class NumericError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "numeric"; }
};

/// Observed positive count at a cell whose Poisson rate is zero.
class DegeneracyError : public NumericError {
  public:
    DegeneracyError(const std::string& what, std::size_t term, std::size_t doc)
        : NumericError(what + " at (term=" + std::to_string(term) +
                       ", doc=" + std::to_string(doc) + ")"),
          term_(term), doc_(doc) {}

    const char* kind() const noexcept override { return "degeneracy"; }
    std::size_t term() const noexcept { return term_; }
    std::size_t doc() const noexcept { return doc_; }

  private:
    std::size_t term_;
    std::size_t doc_;
};

/// Malformed input file. Carries the 1-based line number.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    const char* kind() const noexcept override { return "parse"; }
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Well-formed input that violates a declared constraint.
class ValidationError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation"; }
};

/// Bad command line or configuration.
class UsageError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "usage"; }
};

namespace detail {

[[noreturn]] inline void domain_fail(const char* fn, const std::string& msg) {
    throw DomainError(std::string(fn) + ": " + msg);
}

} // namespace detail
} // namespace bnbpfa
