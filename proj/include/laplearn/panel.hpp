// Sample panels: an n x p matrix of a stationary process plus sampling
// metadata, with CSV round-tripping (optional "t,y1..yp" header).
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>

#include "laplearn/matcore.hpp"

namespace laplearn {

struct TimeSeriesPanel {
    RealMatrix data;  // n rows (time) x p columns (nodes)
    std::uint64_t seed = 0;
    std::string process_tag;

    Index n() const { return data.rows(); }
    Index p() const { return data.cols(); }
};

inline TimeSeriesPanel make_panel(RealMatrix data, std::uint64_t seed, std::string tag) {
    if (data.rows() < 1 || data.cols() < 1)
        throw ParameterOutOfRange("panel requires n >= 1 and p >= 1");
    if (!data.allFinite()) throw ParameterOutOfRange("panel contains non-finite entries");
    return TimeSeriesPanel{std::move(data), seed, std::move(tag)};
}

inline void write_panel_csv(const std::filesystem::path& path, const TimeSeriesPanel& panel) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << 't';
    for (Index j = 0; j < panel.p(); ++j) f << ",y" << (j + 1);
    f << '\n';
    for (Index t = 0; t < panel.n(); ++t) {
        f << (t + 1);
        for (Index j = 0; j < panel.p(); ++j) f << ',' << format_double(panel.data(t, j));
        f << '\n';
    }
}

inline TimeSeriesPanel read_panel_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    bool drop_time_column = false;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto toks = detail::split_csv_line(line);
        if (rows.empty()) {
            double probe = 0.0;
            auto res = std::from_chars(toks[0].data(), toks[0].data() + toks[0].size(), probe);
            if (res.ec != std::errc()) {
                drop_time_column = !toks.empty() && (toks[0] == "t" || toks[0] == "T");
                if (!drop_time_column && !toks.empty()) drop_time_column = false;
                continue;  // header line
            }
        }
        std::vector<double> vals;
        vals.reserve(toks.size());
        const std::size_t start = drop_time_column ? 1 : 0;
        if (drop_time_column && toks.size() < 2)
            throw ParseError("line " + std::to_string(line_no) + ": missing value columns");
        for (std::size_t k = start; k < toks.size(); ++k)
            vals.push_back(detail::parse_double_token(toks[k], line_no));
        if (!rows.empty() && vals.size() != rows.front().size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(rows.front().size()) + " values, got " +
                             std::to_string(vals.size()));
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw ParseError("line " + std::to_string(line_no) + ": no data rows");
    RealMatrix data(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < data.rows(); ++i)
        for (Index j = 0; j < data.cols(); ++j)
            data(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return make_panel(std::move(data), 0, path.filename().string());
}

}  // namespace laplearn
