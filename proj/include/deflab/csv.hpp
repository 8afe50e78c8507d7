#pragma once

#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deflab/grid.hpp"

namespace deflab {

/// Full double precision (17 significant digits), locale-independent.
inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& header) : out_(path) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
        out_ << header << '\n';
    }

    void row(std::span<const double> cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << fmt_g17(cells[i]);
        }
        out_ << '\n';
    }

    void row_raw(const std::string& line) { out_ << line << '\n'; }

  private:
    std::ofstream out_;
};

/// Path export contract: header `t,value`, one row per grid point.
inline void write_path_csv(const std::string& file, const SamplePath& p) {
    CsvWriter w(file, "t,value");
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double cells[2] = {p.t(j), p[j]};
        w.row(cells);
    }
}

inline void write_column_csv(const std::string& file, const std::string& name,
                             std::span<const double> xs) {
    CsvWriter w(file, name);
    for (double x : xs) {
        const double cell[1] = {x};
        w.row(cell);
    }
}

} // namespace deflab
