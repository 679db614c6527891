#include "superflow/report.hpp"

#include <algorithm>

namespace superflow {

bool CheckReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* CheckReport::first_failure() const {
    for (const Check& c : checks)
        if (!c.pass) return &c;
    return nullptr;
}

const Check* CheckReport::find(const std::string& name) const {
    for (const Check& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

Check& CheckReport::add(std::string name, bool pass, double residual, std::string witness) {
    checks.push_back(Check{std::move(name), pass, residual, std::move(witness)});
    return checks.back();
}

void CheckReport::append(const CheckReport& other, const std::string& prefix) {
    for (Check c : other.checks) {
        if (!prefix.empty()) c.name = prefix + c.name;
        checks.push_back(std::move(c));
    }
}

}  // namespace superflow
