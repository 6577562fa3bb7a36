#include "drdam/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "drdam/errors.hpp"

namespace drdam::io {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
    out << "experiment,beta,D,K,Y,query_class,metric_name,value,stderr,seed\n";
    for (const MetricRow& r : rows) {
        out << r.experiment << ',' << format_double(r.beta) << ',' << r.dim << ','
            << r.num_memories << ',' << r.num_projections << ',' << r.query_class << ','
            << r.metric_name << ',' << format_double(r.value) << ','
            << format_double(r.stderr_value) << ',' << r.seed << '\n';
    }
}

void write_metric_csv_file(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_metric_csv(out, rows);
}

void write_patterns_csv(const std::string& path, const std::vector<Pattern>& patterns) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const Pattern& p : patterns) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (i) out << ',';
            out << format_double(p[i]);
        }
        out << '\n';
    }
}

std::vector<Pattern> read_patterns_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<Pattern> patterns;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Pattern p;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            // strtod instead of stod: subnormal values must round-trip, not
            // raise out_of_range.
            const char* begin = field.c_str();
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end != begin + field.size() || field.empty())
                throw std::runtime_error("patterns CSV: bad value '" + field + "' on line " +
                                         std::to_string(lineno));
            p.push_back(v);
        }
        if (!patterns.empty() && p.size() != patterns.front().size())
            throw ShapeError("patterns CSV: inconsistent row length on line " +
                             std::to_string(lineno));
        patterns.push_back(std::move(p));
    }
    return patterns;
}

void write_pixmap(const std::string& path, const Pixmap& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("write_pixmap: channels must be 1 or 3");
    if (img.pixels.size() != img.size()) throw ShapeError("write_pixmap: pixel buffer size");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << (img.channels == 1 ? "P5" : "P6") << '\n'
        << img.width << ' ' << img.height << '\n'
        << "255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw std::runtime_error("write_pixmap: write failed: " + path);
}

namespace {

// Reads one whitespace/comment-delimited header token, tracking the offset.
std::string next_token(std::istream& in, std::size_t& offset) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        ++offset;
        if (c == '#') { // comment through end of line
            while ((c = in.get()) != EOF) {
                ++offset;
                if (c == '\n') break;
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw ParseError("pixmap: truncated header", offset);
    return tok;
}

std::size_t parse_count(const std::string& tok, const char* what, std::size_t offset) {
    try {
        const long long v = std::stoll(tok);
        if (v < 0) throw std::invalid_argument(tok);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ParseError(std::string("pixmap: bad ") + what + " '" + tok + "'", offset);
    }
}

} // namespace

Pixmap read_pixmap(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::size_t offset = 0;

    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (!in || m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw ParseError("pixmap: bad magic, expected P5 or P6", 0);
    offset = 2;

    Pixmap img;
    img.channels = m1 == '5' ? 1 : 3;
    img.width = parse_count(next_token(in, offset), "width", offset);
    img.height = parse_count(next_token(in, offset), "height", offset);
    const std::size_t maxval = parse_count(next_token(in, offset), "maxval", offset);
    if (maxval != 255) throw ParseError("pixmap: unsupported maxval", offset);

    img.pixels.resize(img.size());
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.pixels.size())
        throw ParseError("pixmap: truncated pixel data", offset + static_cast<std::size_t>(in.gcount()));
    return img;
}

void write_energy_trace(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "step,energy\n";
    for (std::size_t t = 0; t < traj.energies.size(); ++t)
        out << t << ',' << format_double(traj.energies[t]) << '\n';
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<Series>& series) {
    constexpr double kW = 640, kH = 420, kPad = 48;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const Series& s : series) {
        for (auto [x, y] : s.points) {
            if (first) {
                xmin = xmax = x;
                ymin = ymax = y;
                first = false;
            }
            xmin = std::min(xmin, x), xmax = std::max(xmax, x);
            ymin = std::min(ymin, y), ymax = std::max(ymax, y);
        }
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const auto px = [&](double x) { return kPad + (x - xmin) / (xmax - xmin) * (kW - 2 * kPad); };
    const auto py = [&](double y) { return kH - kPad - (y - ymin) / (ymax - ymin) * (kH - 2 * kPad); };
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH
        << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << kW / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
        << "</text>\n";
    out << "<line x1='" << kPad << "' y1='" << kH - kPad << "' x2='" << kW - kPad << "' y2='"
        << kH - kPad << "' stroke='black'/>\n";
    out << "<line x1='" << kPad << "' y1='" << kPad << "' x2='" << kPad << "' y2='"
        << kH - kPad << "' stroke='black'/>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kColors[i % 6];
        out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (auto [x, y] : series[i].points) out << px(x) << ',' << py(y) << ' ';
        out << "'/>\n";
        out << "<text x='" << kW - kPad + 4 << "' y='" << kPad + 16 * static_cast<double>(i)
            << "' font-size='11' fill='" << color << "'>" << series[i].label << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace drdam::io
