#pragma once

// Text serialization for densities, orbits, states/operators, lattice grids,
// spectra and entropy curves. Numbers are written with 17 significant digits
// so every file parses back to the identical doubles.
//
// Formats
//   density CSV   line 1 "M,delta", line 2 values, then M rows (q index) of M
//                 comma-separated values (p index)
//   density JSON  {"kind":"classical_density","M","delta","values":[[...]]}
//   orbits JSON   [{"T","n","period","points":[[q,p],...]}, ...]
//   matrix JSON   {"kind","dim","data":[[re,im],...]} row-major
//   grid CSV      one row per sampled q index, one column per sampled p index
//   grid JSON     {"kind","N","delta","T","q_indices","p_indices","values"}
//   spectrum CSV  header "re,im,modulus", one eigenvalue per line
//   entropy CSV   "# key=value" metadata lines, header "T,mean,std"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "classical.hpp"
#include "phasespace.hpp"
#include "spectral.hpp"

namespace sloppy_baker::io {

using nlohmann::json;

inline std::string format_double(double x) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", x);
    return buffer;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

inline double parse_double(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw PreconditionError("cannot parse number '" + text + "'");
    }
    detail::require(used == text.size() || text.find_first_not_of(" \r", used) == std::string::npos,
                    "cannot parse number '" + text + "'");
    return v;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Classical densities

inline std::string density_to_csv(const ClassicalDensity& f, double delta) {
    std::string out = "M,delta\n" + std::to_string(f.resolution()) + "," + format_double(delta) + "\n";
    const int m = f.resolution();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (j > 0) out += ',';
            out += format_double(f(i, j));
        }
        out += '\n';
    }
    return out;
}

struct DensityRecord {
    ClassicalDensity density;
    double delta = 0.0;
};

inline DensityRecord density_from_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    std::getline(ss, line);
    detail::require(line.rfind("M,delta", 0) == 0, "density CSV: missing 'M,delta' header");
    std::getline(ss, line);
    const auto meta = split(line, ',');
    detail::require(meta.size() == 2, "density CSV: malformed metadata line");
    const int m = static_cast<int>(parse_double(meta[0]));
    const double delta = parse_double(meta[1]);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i) {
        detail::require(static_cast<bool>(std::getline(ss, line)), "density CSV: too few rows");
        const auto cells = split(line, ',');
        detail::require(static_cast<int>(cells.size()) == m, "density CSV: row length differs from M");
        for (const auto& c : cells) values.push_back(parse_double(c));
    }
    return {ClassicalDensity::unnormalized(m, std::move(values)), delta};
}

inline json density_to_json(const ClassicalDensity& f, double delta) {
    json rows = json::array();
    for (int i = 0; i < f.resolution(); ++i) {
        json row = json::array();
        for (int j = 0; j < f.resolution(); ++j) row.push_back(f(i, j));
        rows.push_back(std::move(row));
    }
    return {{"kind", "classical_density"}, {"M", f.resolution()}, {"delta", delta}, {"values", std::move(rows)}};
}

inline DensityRecord density_from_json(const json& j) {
    const int m = j.at("M").get<int>();
    std::vector<double> values;
    for (const auto& row : j.at("values")) {
        detail::require(static_cast<int>(row.size()) == m, "density JSON: row length differs from M");
        for (const auto& v : row) values.push_back(v.get<double>());
    }
    detail::require(values.size() == static_cast<std::size_t>(m) * m, "density JSON: needs M rows");
    return {ClassicalDensity::unnormalized(m, std::move(values)), j.at("delta").get<double>()};
}

// ---------------------------------------------------------------------------
// Orbits

inline json orbits_to_json(const std::vector<PeriodicOrbit>& orbits, int requested_period) {
    json out = json::array();
    for (const auto& o : orbits) {
        json points = json::array();
        for (const auto& x : o.points) points.push_back({x.q, x.p});
        out.push_back({{"T", requested_period}, {"n", o.label}, {"period", o.period}, {"points", std::move(points)}});
    }
    return out;
}

inline std::vector<PeriodicOrbit> orbits_from_json(const json& j) {
    std::vector<PeriodicOrbit> out;
    for (const auto& rec : j) {
        PeriodicOrbit o;
        o.label = rec.at("n").get<std::uint64_t>();
        o.period = rec.at("period").get<int>();
        for (const auto& pt : rec.at("points")) o.points.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
        out.push_back(std::move(o));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Complex matrices and states

inline json matrix_to_json(const ComplexMatrix& m, const std::string& kind = "operator") {
    detail::require(m.rows() == m.cols(), "matrix_to_json: matrix must be square");
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back({m(r, c).real(), m(r, c).imag()});
    }
    return {{"kind", kind}, {"dim", m.rows()}, {"data", std::move(data)}};
}

inline ComplexMatrix matrix_from_json(const json& j) {
    const auto n = j.at("dim").get<Eigen::Index>();
    const auto& data = j.at("data");
    detail::require(n > 0 && data.size() == static_cast<std::size_t>(n * n), "matrix JSON: data must hold dim^2 entries");
    ComplexMatrix m(n, n);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c, ++k) m(r, c) = Complex(data[k].at(0).get<double>(), data[k].at(1).get<double>());
    }
    return m;
}

inline json state_to_json(const QuantumState& s) { return matrix_to_json(s.matrix(), "density_matrix"); }

inline QuantumState state_from_json(const json& j) { return QuantumState(matrix_from_json(j)); }

// ---------------------------------------------------------------------------
// Lattice grids

struct GridMetadata {
    std::string kind;  // "husimi" | "return_probability"
    double delta = 0.0;
    int steps = 0;
};

inline std::string grid_to_csv(const HusimiGrid& g) {
    std::string out;
    for (Eigen::Index r = 0; r < g.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < g.values.cols(); ++c) {
            if (c > 0) out += ',';
            out += format_double(g.values(r, c));
        }
        out += '\n';
    }
    return out;
}

inline json grid_metadata_json(const HusimiGrid& g, const GridMetadata& meta) {
    return {{"kind", meta.kind}, {"N", g.n}, {"delta", meta.delta}, {"T", meta.steps},
            {"q_indices", g.q_indices}, {"p_indices", g.p_indices}};
}

inline json grid_to_json(const HusimiGrid& g, const GridMetadata& meta) {
    json j = grid_metadata_json(g, meta);
    json rows = json::array();
    for (Eigen::Index r = 0; r < g.values.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < g.values.cols(); ++c) row.push_back(g.values(r, c));
        rows.push_back(std::move(row));
    }
    j["values"] = std::move(rows);
    return j;
}

/// Rebuilds a grid from its CSV body and JSON metadata sidecar.
inline HusimiGrid grid_from_csv(const std::string& text, const json& meta) {
    HusimiGrid g;
    g.n = meta.at("N").get<int>();
    g.q_indices = meta.at("q_indices").get<std::vector<int>>();
    g.p_indices = meta.at("p_indices").get<std::vector<int>>();
    const auto rows = static_cast<Eigen::Index>(g.q_indices.size());
    const auto cols = static_cast<Eigen::Index>(g.p_indices.size());
    g.values = RealMatrix::Zero(rows, cols);
    std::stringstream ss(text);
    std::string line;
    for (Eigen::Index r = 0; r < rows; ++r) {
        detail::require(static_cast<bool>(std::getline(ss, line)), "grid CSV: too few rows");
        const auto cells = split(line, ',');
        detail::require(static_cast<Eigen::Index>(cells.size()) == cols, "grid CSV: row length mismatch");
        for (Eigen::Index c = 0; c < cols; ++c) g.values(r, c) = parse_double(cells[static_cast<std::size_t>(c)]);
    }
    return g;
}

inline HusimiGrid grid_from_json(const json& j) {
    HusimiGrid g;
    g.n = j.at("N").get<int>();
    g.q_indices = j.at("q_indices").get<std::vector<int>>();
    g.p_indices = j.at("p_indices").get<std::vector<int>>();
    const auto& rows = j.at("values");
    g.values = RealMatrix::Zero(static_cast<Eigen::Index>(g.q_indices.size()), static_cast<Eigen::Index>(g.p_indices.size()));
    detail::require(rows.size() == g.q_indices.size(), "grid JSON: row count mismatch");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        detail::require(rows[r].size() == g.p_indices.size(), "grid JSON: row length mismatch");
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            g.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Spectra

inline std::string spectrum_to_csv(const std::vector<Complex>& values) {
    std::string out = "re,im,modulus\n";
    for (const auto& v : values) {
        out += format_double(v.real()) + "," + format_double(v.imag()) + "," + format_double(std::abs(v)) + "\n";
    }
    return out;
}

inline std::vector<Complex> spectrum_from_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    std::getline(ss, line);
    detail::require(line.rfind("re,im,modulus", 0) == 0, "spectrum CSV: missing header");
    std::vector<Complex> out;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        detail::require(cells.size() == 3, "spectrum CSV: expected three columns");
        out.emplace_back(parse_double(cells[0]), parse_double(cells[1]));
    }
    return out;
}

inline json spectral_report_to_json(const SpectralReport& r) {
    json eigenvalues = json::array();
    for (const auto& v : r.eigenvalues) eigenvalues.push_back({v.real(), v.imag()});
    json j = {{"kind", "spectral_report"},
              {"N", r.n},
              {"dense", r.dense},
              {"lambda1", {r.lambda1.real(), r.lambda1.imag()}},
              {"lambda2_modulus", r.lambda2_modulus},
              {"gap", r.gap},
              {"zero_multiplicity", r.zero_multiplicity},
              {"eigenvalues", std::move(eigenvalues)}};
    if (r.zero_defect) {
        j["zero_defect"] = {{"algebraic", r.zero_defect->algebraic},
                            {"geometric", r.zero_defect->geometric},
                            {"defective", r.zero_defect->defective},
                            {"rank", r.zero_defect->rank},
                            {"rank_threshold", r.zero_defect->rank_threshold}};
    }
    return j;
}

inline SpectralReport spectral_report_from_json(const json& j) {
    SpectralReport r;
    r.n = j.at("N").get<int>();
    r.dense = j.at("dense").get<bool>();
    r.lambda1 = Complex(j.at("lambda1").at(0).get<double>(), j.at("lambda1").at(1).get<double>());
    r.lambda2_modulus = j.at("lambda2_modulus").get<double>();
    r.gap = j.at("gap").get<double>();
    r.zero_multiplicity = j.at("zero_multiplicity").get<int>();
    for (const auto& v : j.at("eigenvalues")) r.eigenvalues.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    if (j.contains("zero_defect")) {
        const auto& d = j.at("zero_defect");
        r.zero_defect = DefectReport{d.at("algebraic").get<int>(), d.at("geometric").get<int>(),
                                     d.at("defective").get<bool>(), d.at("rank").get<int>(),
                                     d.at("rank_threshold").get<double>()};
    }
    return r;
}

// ---------------------------------------------------------------------------
// Entropy curves

inline std::string entropy_curve_to_csv(const EntropyCurve& c) {
    std::string out;
    out += "# N=" + std::to_string(c.n) + "\n";
    out += "# delta=" + format_double(c.delta) + "\n";
    out += "# samples=" + std::to_string(c.samples) + "\n";
    out += "# seed=" + std::to_string(c.seed) + "\n";
    out += "# slope=" + format_double(c.slope) + "\n";
    out += "# intercept=" + format_double(c.intercept) + "\n";
    out += "# window_end=" + std::to_string(c.window_end) + "\n";
    out += "T,mean,std\n";
    for (std::size_t i = 0; i < c.times.size(); ++i) {
        out += std::to_string(c.times[i]) + "," + format_double(c.mean[i]) + "," + format_double(c.stddev[i]) + "\n";
    }
    return out;
}

inline EntropyCurve entropy_curve_from_csv(const std::string& text) {
    EntropyCurve c;
    std::stringstream ss(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            detail::require(eq != std::string::npos, "entropy CSV: malformed metadata line");
            const std::string key = line.substr(2, eq - 2);
            const std::string value = line.substr(eq + 1);
            if (key == "N") c.n = std::stoi(value);
            else if (key == "delta") c.delta = parse_double(value);
            else if (key == "samples") c.samples = std::stoi(value);
            else if (key == "seed") c.seed = std::stoull(value);
            else if (key == "slope") c.slope = parse_double(value);
            else if (key == "intercept") c.intercept = parse_double(value);
            else if (key == "window_end") c.window_end = std::stoi(value);
            continue;
        }
        if (!header_seen) {
            detail::require(line == "T,mean,std", "entropy CSV: missing 'T,mean,std' header");
            header_seen = true;
            continue;
        }
        const auto cells = split(line, ',');
        detail::require(cells.size() == 3, "entropy CSV: expected three columns");
        c.times.push_back(std::stoi(cells[0]));
        c.mean.push_back(parse_double(cells[1]));
        c.stddev.push_back(parse_double(cells[2]));
    }
    return c;
}

} // namespace sloppy_baker::io
