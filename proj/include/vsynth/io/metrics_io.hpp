#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vsynth/eval.hpp"
#include "vsynth/io/binary.hpp"
#include "vsynth/io/csv.hpp"

namespace vsynth::io {

// NaN aggregates (e.g. no scored windows) serialize as JSON null.
inline nlohmann::json json_number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

inline nlohmann::json metrics_report_to_json(const eval::MetricsReport& report) {
    nlohmann::json j;
    j["mae"] = json_number_or_null(report.mae);
    j["std"] = json_number_or_null(report.std);
    nlohmann::json extras = nlohmann::json::object();
    for (const auto& [key, value] : report.extras) {
        extras[key] = json_number_or_null(value);
    }
    j["extras"] = std::move(extras);
    nlohmann::json rows = nlohmann::json::array();
    for (const eval::WindowRow& row : report.per_window) {
        nlohmann::json r;
        r["window_start"] = row.window_start;
        r["predicted_rate"] = json_number_or_null(row.predicted_rate);
        r["reference_rate"] = json_number_or_null(row.reference_rate);
        if (!row.label.empty()) r["label"] = row.label;
        rows.push_back(std::move(r));
    }
    j["per_window"] = std::move(rows);
    return j;
}

inline nlohmann::json roi_report_to_json(const eval::RoiSequenceReport& report) {
    nlohmann::json j;
    j["mean_iou"] = json_number_or_null(report.mean_iou);
    j["center_hit_rate"] = json_number_or_null(report.chr);
    j["mean_center_distance"] = json_number_or_null(report.mean_dc);
    j["frames"] = report.frames;
    j["empty_frames"] = report.empty_frames;
    return j;
}

// One row per scored window: start frame, both rates, absolute error and the
// optional grouping label.
inline void write_metrics_csv(const std::string& path, const eval::MetricsReport& report) {
    std::ofstream os = detail::open_for_write(path);
    os << "window_start,predicted_rate,reference_rate,abs_error,label\n";
    for (const eval::WindowRow& row : report.per_window) {
        os << row.window_start << ',' << format_double(row.predicted_rate) << ','
           << format_double(row.reference_rate) << ','
           << format_double(std::abs(row.predicted_rate - row.reference_rate)) << ','
           << row.label << "\n";
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

namespace detail {

inline std::string fixed2(double v) {
    if (!std::isfinite(v)) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

}  // namespace detail

// Plain-text summary table: one row per window label plus an overall row,
// columns MAE / STD / windows, right-aligned for terminal reading.
inline std::string format_metrics_table(const eval::MetricsReport& report) {
    struct TableRow {
        std::string name;
        double mae;
        double std;
        int windows;
    };
    std::vector<TableRow> rows;
    for (const eval::WindowRow& row : report.per_window) {
        if (row.label.empty()) continue;
        bool seen = false;
        for (const TableRow& r : rows) seen = seen || r.name == row.label;
        if (seen) continue;
        const auto mae = report.extras.find("mae_" + row.label);
        const auto std_it = report.extras.find("std_" + row.label);
        const auto count = report.extras.find("windows_" + row.label);
        rows.push_back({row.label,
                        mae != report.extras.end() ? mae->second : std::nan(""),
                        std_it != report.extras.end() ? std_it->second : std::nan(""),
                        count != report.extras.end() ? static_cast<int>(count->second) : 0});
    }
    const auto scored = report.extras.find("windows_scored");
    rows.push_back({"All", report.mae, report.std,
                    scored != report.extras.end() ? static_cast<int>(scored->second)
                                                  : static_cast<int>(report.per_window.size())});

    std::size_t name_w = 0;
    for (const TableRow& r : rows) name_w = std::max(name_w, r.name.size());
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(name_w)) << "" << std::right
       << std::setw(9) << "MAE" << std::setw(9) << "STD" << std::setw(10) << "windows"
       << "\n";
    for (const TableRow& r : rows) {
        os << std::left << std::setw(static_cast<int>(name_w)) << r.name << std::right
           << std::setw(9) << detail::fixed2(r.mae) << std::setw(9) << detail::fixed2(r.std)
           << std::setw(10) << r.windows << "\n";
    }
    return os.str();
}

}  // namespace vsynth::io
