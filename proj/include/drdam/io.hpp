#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "drdam/datasets.hpp"
#include "drdam/dynamics.hpp"
#include "drdam/vec.hpp"

namespace drdam::io {

/// One record of the fixed metrics schema.  Formatting is deterministic
/// (%.17g), so identical runs emit byte-identical files.
struct MetricRow {
    std::string experiment;
    double beta = 0.0;
    std::size_t dim = 0;
    std::size_t num_memories = 0;
    std::size_t num_projections = 0;
    std::string query_class; // at | near | random | -
    std::string metric_name;
    double value = 0.0;
    double stderr_value = 0.0;
    std::uint64_t seed = 0;
};

std::string format_double(double v);
void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows);
void write_metric_csv_file(const std::string& path, const std::vector<MetricRow>& rows);

/// Patterns as CSV, one pattern per row; values round-trip exactly.
void write_patterns_csv(const std::string& path, const std::vector<Pattern>& patterns);
std::vector<Pattern> read_patterns_csv(const std::string& path);

/// Binary PGM (P5) / PPM (P6), maxval 255.
void write_pixmap(const std::string& path, const Pixmap& img);
Pixmap read_pixmap(const std::string& path);

/// Per-step energies as "step,energy" rows.
void write_energy_trace(const std::string& path, const Trajectory& traj);

/// Minimal SVG polyline chart; one series per (label, points) pair, points
/// as (x, y).  Log-scaling is the caller's business.
struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<Series>& series);

} // namespace drdam::io
