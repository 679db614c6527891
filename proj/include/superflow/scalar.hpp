#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace superflow {

using cplx = std::complex<double>;

/// Ground field of a superdomain.
enum class Field { real, complex };

std::string to_string(Field f);

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line` and `column` are 1-based; 0 means unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Numeric evaluation left the domain of a coefficient function.
class DomainError : public Error {
public:
    DomainError(const std::string& what, std::string subexpression);
    const std::string& subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

/// A parity (Z/2 grading) precondition was violated.
class ParityError : public Error {
public:
    using Error::Error;
};

/// Operands live on different superdomains.
class DomainMismatch : public Error {
public:
    using Error::Error;
};

/// A real or complex number tagged with its field. Arithmetic between
/// different fields is rejected.
class Scalar {
public:
    Scalar() = default;
    Scalar(double v) : value_(v, 0.0), field_(Field::real) {}  // NOLINT
    Scalar(cplx v, Field f);

    static Scalar real(double v) { return Scalar(v); }
    static Scalar complex(cplx v) { return Scalar(v, Field::complex); }

    cplx value() const noexcept { return value_; }
    Field field() const noexcept { return field_; }
    double re() const noexcept { return value_.real(); }
    double im() const noexcept { return value_.imag(); }

    Scalar& operator+=(const Scalar& o);
    Scalar& operator-=(const Scalar& o);
    Scalar& operator*=(const Scalar& o);
    Scalar& operator/=(const Scalar& o);

    friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
    friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
    friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
    friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }
    friend Scalar operator-(const Scalar& a) { return Scalar(-a.value_, a.field_); }
    friend bool operator==(const Scalar& a, const Scalar& b) {
        return a.field_ == b.field_ && a.value_ == b.value_;
    }

private:
    void require_same_field(const Scalar& o) const;

    cplx value_{0.0, 0.0};
    Field field_ = Field::real;
};

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// `a`, `bi` or `(a + bi)`; imaginary parts printed with an `i` suffix.
std::string format_cplx(cplx v);

}  // namespace superflow
