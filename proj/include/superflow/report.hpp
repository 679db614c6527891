#pragma once

#include <string>
#include <vector>

namespace superflow {

/// One named verification with its worst residual and, on failure, a
/// witness that reproduces it in isolation.
struct Check {
    std::string name;
    bool pass = true;
    double residual = 0.0;
    std::string witness;
};

struct CheckReport {
    std::vector<Check> checks;

    bool pass() const;
    const Check* first_failure() const;
    const Check* find(const std::string& name) const;
    Check& add(std::string name, bool pass, double residual = 0.0, std::string witness = {});
    void append(const CheckReport& other, const std::string& prefix = {});
};

}  // namespace superflow
