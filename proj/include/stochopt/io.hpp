#pragma once

// File formats:
//   density CSV      one line per cell row, row j = 0 (smallest y) first,
//                    comma-separated, cells i = 0..nx-1 left to right.
//   density PGM      binary P5, 8 bit, top row (largest y) first;
//                    pixel = round(255 (a - alpha) / (beta - alpha)).
//   convergence log  header "iter cost penalized_cost mass gamma step_eps",
//                    then one whitespace-separated record per line.
//   scenario file    JSON: {"nx", "ny", "f": [nx*ny], "scenarios":
//                    [{"weight": w, "xi": [nx*ny]}, ...]}, cells in
//                    index order i + j*nx on the unit square.

#include "stochopt/descent_optimizer.hpp"
#include "stochopt/errors.hpp"
#include "stochopt/grid_fem.hpp"
#include "stochopt/load_scenarios.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace stochopt::io {

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_density_csv(std::ostream& os, const CellField& a)
{
    const GridSpec& g = a.grid;
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            if (i)
                os << ',';
            os << format_double(a(i, j));
        }
        os << '\n';
    }
}

/// Reads a density CSV; the grid is the unit square with one cell per value.
inline CellField read_density_csv(std::istream& is)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r")
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InvalidInput("density CSV: unparsable value '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw InvalidInput("density CSV: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2 || rows.front().size() < 2)
        throw InvalidInput("density CSV: need at least a 2x2 grid");
    const GridSpec g = GridSpec::unit_square(rows.front().size(), rows.size());
    CellField out(g);
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i)
            out(i, j) = rows[j][i];
    return out;
}

inline std::uint8_t pgm_pixel(double a, double alpha, double beta)
{
    if (!(beta > alpha))
        return 0;
    const double t = std::clamp((a - alpha) / (beta - alpha), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(255.0 * t));
}

inline void write_density_pgm(std::ostream& os, const CellField& a, double alpha, double beta)
{
    const GridSpec& g = a.grid;
    os << "P5\n" << g.nx << ' ' << g.ny << "\n255\n";
    for (std::size_t j = g.ny; j-- > 0;)
        for (std::size_t i = 0; i < g.nx; ++i)
            os.put(static_cast<char>(pgm_pixel(a(i, j), alpha, beta)));
}

struct PgmImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels; ///< top row first
};

inline PgmImage read_pgm(std::istream& is)
{
    std::string magic;
    PgmImage img;
    int maxval = 0;
    is >> magic >> img.width >> img.height >> maxval;
    if (magic != "P5" || maxval != 255 || !is)
        throw InvalidInput("PGM: expected 8-bit binary P5 image");
    is.get();
    img.pixels.resize(img.width * img.height);
    is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(is.gcount()) != img.pixels.size())
        throw InvalidInput("PGM: truncated pixel data");
    return img;
}

inline constexpr const char* kLogHeader = "iter cost penalized_cost mass gamma step_eps";

inline void write_log_header(std::ostream& os) { os << kLogHeader << '\n'; }

inline void write_log_record(std::ostream& os, const ConvergenceRecord& r)
{
    os << r.iter << ' ' << format_double(r.cost) << ' ' << format_double(r.penalized_cost) << ' '
       << format_double(r.mass) << ' ' << format_double(r.gamma) << ' ' << format_double(r.step_eps) << '\n';
}

inline void write_convergence_log(std::ostream& os, const std::vector<ConvergenceRecord>& history)
{
    write_log_header(os);
    for (const auto& r : history)
        write_log_record(os, r);
}

inline std::vector<ConvergenceRecord> read_convergence_log(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("iter", 0) != 0)
        throw InvalidInput("convergence log: missing header");
    std::vector<ConvergenceRecord> out;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::istringstream ls(line);
        ConvergenceRecord r;
        if (!(ls >> r.iter >> r.cost >> r.penalized_cost >> r.mass >> r.gamma >> r.step_eps))
            throw InvalidInput("convergence log: malformed record '" + line + "'");
        out.push_back(r);
    }
    return out;
}

/// Parses a scenario file and enforces the set invariants at the file tolerance.
inline ScenarioSet parse_scenario_json(const std::string& text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("scenario file: ") + e.what());
    }
    try {
        const GridSpec g = GridSpec::unit_square(doc.at("nx").get<std::size_t>(), doc.at("ny").get<std::size_t>());
        auto field = [&](const nlohmann::json& arr, const char* what) {
            auto v = arr.get<std::vector<double>>();
            if (v.size() != g.cell_count())
                throw InvalidInput(std::string("scenario file: ") + what + " has " + std::to_string(v.size()) +
                                   " values, expected " + std::to_string(g.cell_count()));
            return CellField(g, std::move(v));
        };
        ScenarioSet set{field(doc.at("f"), "f"), {}};
        for (const auto& s : doc.at("scenarios"))
            set.scenarios.push_back({field(s.at("xi"), "xi"), s.at("weight").get<double>()});
        if (auto v = validate(set, kFileScenarioTol); !v.empty())
            throw InvalidInput("scenario file: " + v.front());
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("scenario file: ") + e.what());
    }
}

inline ScenarioSet load_scenario_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("scenario file: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_json(ss.str());
}

inline std::string scenario_json(const ScenarioSet& set)
{
    nlohmann::json doc;
    doc["nx"] = set.grid().nx;
    doc["ny"] = set.grid().ny;
    doc["f"] = set.f.values;
    doc["scenarios"] = nlohmann::json::array();
    for (const auto& s : set.scenarios)
        doc["scenarios"].push_back({{"weight", s.weight}, {"xi", s.xi.values}});
    return doc.dump(1);
}

} // namespace stochopt::io
