#include "superflow/scalar.hpp"

#include <charconv>
#include <cmath>

namespace superflow {

std::string to_string(Field f) { return f == Field::real ? "real" : "complex"; }

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : Error(line ? what + " (line " + std::to_string(line) + ", column " +
                       std::to_string(column) + ")"
                 : what),
      line_(line),
      column_(column) {}

DomainError::DomainError(const std::string& what, std::string subexpression)
    : Error(what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}

Scalar::Scalar(cplx v, Field f) : value_(v), field_(f) {
    if (f == Field::real && v.imag() != 0.0)
        throw DomainError("imaginary value in a real field", format_cplx(v));
}

void Scalar::require_same_field(const Scalar& o) const {
    if (field_ != o.field_)
        throw DomainMismatch("cannot mix " + to_string(field_) + " and " +
                             to_string(o.field_) + " scalars");
}

Scalar& Scalar::operator+=(const Scalar& o) {
    require_same_field(o);
    value_ += o.value_;
    return *this;
}

Scalar& Scalar::operator-=(const Scalar& o) {
    require_same_field(o);
    value_ -= o.value_;
    return *this;
}

Scalar& Scalar::operator*=(const Scalar& o) {
    require_same_field(o);
    value_ *= o.value_;
    return *this;
}

Scalar& Scalar::operator/=(const Scalar& o) {
    require_same_field(o);
    if (o.value_ == cplx(0.0, 0.0)) throw DomainError("division by zero", format_cplx(value_) + "/0");
    value_ /= o.value_;
    return *this;
}

std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_cplx(cplx v) {
    const double re = v.real();
    const double im = v.imag();
    if (im == 0.0) return format_double(re);
    if (re == 0.0) return format_double(im) + "i";
    std::string out = "(" + format_double(re);
    out += im < 0 ? " - " : " + ";
    out += format_double(std::abs(im)) + "i)";
    return out;
}

}  // namespace superflow
