#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vsynth/core.hpp"
#include "vsynth/io/binary.hpp"

namespace vsynth::io {

// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    if (std::sscanf(buf, "%lf", &back) == 1 && back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            if (std::sscanf(shorter, "%lf", &back) == 1 && back == v) {
                return shorter;
            }
        }
    }
    return buf;
}

namespace detail {

inline double parse_double(const std::string& text, const std::string& context) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) {
        throw IoError(context + ": expected a number, got '" + text + "'");
    }
    while (*end != '\0') {
        if (!std::isspace(static_cast<unsigned char>(*end))) {
            throw IoError(context + ": trailing characters after number in '" + text + "'");
        }
        ++end;
    }
    return v;
}

inline long parse_long(const std::string& text, const std::string& context) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const long v = std::strtol(begin, &end, 10);
    if (end == begin) {
        throw IoError(context + ": expected an integer, got '" + text + "'");
    }
    while (*end != '\0') {
        if (!std::isspace(static_cast<unsigned char>(*end))) {
            throw IoError(context + ": trailing characters after integer in '" + text + "'");
        }
        ++end;
    }
    return v;
}

inline std::vector<std::string> split_on_commas(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

inline std::string strip(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace detail

// Time-series CSV layout: a `# fs=<Hz>` comment line, a `frame_index,value`
// header, then one row per frame.
inline void write_series_csv(const std::string& path, const TimeSeries& series) {
    std::ofstream os = detail::open_for_write(path);
    os << "# fs=" << format_double(series.fs) << "\n";
    os << "frame_index,value\n";
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        os << i << ',' << format_double(series.values[i]) << "\n";
    }
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

inline TimeSeries read_series_csv(const std::string& path) {
    std::ifstream is = detail::open_for_read(path);
    std::string line;
    int line_no = 0;

    auto context = [&] { return path + ":" + std::to_string(line_no); };

    if (!std::getline(is, line)) {
        throw IoError(path + ": empty file");
    }
    ++line_no;
    const std::string fs_prefix = "# fs=";
    if (line.rfind(fs_prefix, 0) != 0) {
        throw IoError(context() + ": expected '# fs=<Hz>' comment line");
    }
    const double fs = detail::parse_double(line.substr(fs_prefix.size()), context());
    if (!(fs > 0.0) || !std::isfinite(fs)) {
        throw IoError(context() + ": sampling rate must be finite and positive");
    }

    if (!std::getline(is, line)) {
        throw IoError(path + ": missing header row");
    }
    ++line_no;
    if (detail::strip(line) != "frame_index,value") {
        throw IoError(context() + ": expected header 'frame_index,value'");
    }

    std::vector<double> values;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::strip(line).empty()) {
            continue;
        }
        const std::vector<std::string> fields = detail::split_on_commas(line);
        if (fields.size() != 2) {
            throw IoError(context() + ": expected 2 fields, got " +
                          std::to_string(fields.size()));
        }
        const long idx = detail::parse_long(fields[0], context());
        if (idx != static_cast<long>(values.size())) {
            throw IoError(context() + ": frame_index " + std::to_string(idx) +
                          " out of order (expected " + std::to_string(values.size()) + ")");
        }
        values.push_back(detail::parse_double(fields[1], context()));
    }
    if (values.empty()) {
        throw IoError(path + ": no data rows");
    }
    return TimeSeries(std::move(values), fs);
}

// Generic numeric table writer used for loss traces, metrics, stage dumps and
// plot data.
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream os = detail::open_for_write(path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i != 0) os << ',';
        os << header[i];
    }
    os << "\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw ParamError("row " + std::to_string(r) + " has " +
                             std::to_string(rows[r].size()) + " fields, header has " +
                             std::to_string(header.size()));
        }
        for (std::size_t i = 0; i < rows[r].size(); ++i) {
            if (i != 0) os << ',';
            os << format_double(rows[r][i]);
        }
        os << "\n";
    }
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

// Region-of-interest boxes file: one `x0,y0,x1,y1` row per frame (half-open
// pixel bounds; separators may be commas or whitespace). Blank lines and lines
// starting with '#' are skipped. A single data row applies to every frame.
inline std::vector<Rect> read_boxes_file(const std::string& path) {
    std::ifstream is = detail::open_for_read(path);
    std::vector<Rect> boxes;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string stripped = detail::strip(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        std::string spaced = stripped;
        for (char& c : spaced) {
            if (c == ',') c = ' ';
        }
        std::istringstream fields(spaced);
        long v[4];
        for (int i = 0; i < 4; ++i) {
            if (!(fields >> v[i])) {
                throw IoError(path + ":" + std::to_string(line_no) +
                              ": expected 4 integers (x0 y0 x1 y1)");
            }
        }
        std::string extra;
        if (fields >> extra) {
            throw IoError(path + ":" + std::to_string(line_no) + ": trailing field '" + extra +
                          "'");
        }
        Rect box{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                 static_cast<int>(v[3])};
        if (box.x1 <= box.x0 || box.y1 <= box.y0) {
            throw IoError(path + ":" + std::to_string(line_no) +
                          ": box must satisfy x0 < x1 and y0 < y1");
        }
        boxes.push_back(box);
    }
    if (boxes.empty()) {
        throw IoError(path + ": no boxes found");
    }
    return boxes;
}

}  // namespace vsynth::io
