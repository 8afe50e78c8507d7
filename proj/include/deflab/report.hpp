#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "deflab/csv.hpp"

namespace deflab {

/// One pass/fail line of a run report: a statistic, its target, the
/// tolerance that decides, and the verdict. Non-gating lines are diagnostics.
struct CheckLine {
    std::string name;
    std::string detail;
    bool pass = true;
    bool gating = true;
};

inline CheckLine check_le(const std::string& name, double value, double bound) {
    CheckLine c;
    c.name = name;
    c.pass = value <= bound;
    std::ostringstream os;
    os << "value=" << value << " <= " << bound;
    c.detail = os.str();
    return c;
}

inline CheckLine check_ge(const std::string& name, double value, double bound) {
    CheckLine c;
    c.name = name;
    c.pass = value >= bound;
    std::ostringstream os;
    os << "value=" << value << " >= " << bound;
    c.detail = os.str();
    return c;
}

inline CheckLine check_within(const std::string& name, double value, double target, double tol) {
    CheckLine c;
    c.name = name;
    c.pass = std::abs(value - target) <= tol;
    std::ostringstream os;
    os << "value=" << value << " target=" << target << " tol=" << tol
       << " |diff|=" << std::abs(value - target);
    c.detail = os.str();
    return c;
}

inline CheckLine check_in(const std::string& name, double value, double lo, double hi) {
    CheckLine c;
    c.name = name;
    c.pass = value >= lo && value <= hi;
    std::ostringstream os;
    os << "value=" << value << " in [" << lo << ", " << hi << "]";
    c.detail = os.str();
    return c;
}

inline CheckLine check_true(const std::string& name, bool ok, const std::string& detail = "") {
    return CheckLine{name, detail, ok, true};
}

inline CheckLine info_line(const std::string& name, const std::string& detail) {
    return CheckLine{name, detail, true, false};
}

struct RunReport {
    std::string scenario;
    std::string environment; // seed, grid, version echo
    std::vector<CheckLine> lines;

    void add(CheckLine line) { lines.push_back(std::move(line)); }

    bool passed() const {
        for (const auto& l : lines)
            if (l.gating && !l.pass) return false;
        return true;
    }

    std::string first_failure() const {
        for (const auto& l : lines)
            if (l.gating && !l.pass) return l.name;
        return "";
    }

    std::string to_text() const {
        std::ostringstream os;
        os << "scenario: " << scenario << '\n';
        os << environment << '\n';
        for (const auto& l : lines) {
            if (l.gating)
                os << (l.pass ? "[PASS] " : "[FAIL] ");
            else
                os << "[INFO] ";
            os << l.name;
            if (!l.detail.empty()) os << ": " << l.detail;
            os << '\n';
        }
        os << "RESULT: " << (passed() ? "PASS" : "FAIL") << '\n';
        return os.str();
    }
};

} // namespace deflab
