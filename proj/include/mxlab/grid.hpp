#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"

namespace mxlab {

/// Nonnegative samples at cell centers origin + (i + 1/2) * spacing of a regular grid.
struct GridFunction {
    std::vector<double> origin;
    double spacing = 1.0;
    std::vector<int> dims;
    std::vector<double> values;  // row-major, last index fastest

    GridFunction() = default;
    GridFunction(std::vector<double> o, double h, std::vector<int> n, double fill = 0.0)
        : origin(std::move(o)), spacing(h), dims(std::move(n)) {
        validate_shape();
        values.assign(size(), fill);
    }

    int dim() const { return static_cast<int>(dims.size()); }
    std::size_t size() const {
        std::size_t s = 1;
        for (int n : dims) s *= static_cast<std::size_t>(n);
        return s;
    }
    void validate_shape() const {
        if (dims.empty() || dims.size() > 4 || origin.size() != dims.size())
            throw std::invalid_argument("grid dimension must be in 1..4 and match the origin");
        if (!(spacing > 0.0) || !std::isfinite(spacing)) throw std::invalid_argument("spacing must be positive");
        for (int n : dims)
            if (n < 1) throw std::invalid_argument("grid extents must be positive");
        for (double o : origin)
            if (!std::isfinite(o)) throw std::invalid_argument("origin must be finite");
    }
    void validate() const {
        validate_shape();
        if (values.size() != size()) throw std::invalid_argument("value count does not match dims");
        for (double v : values)
            if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("grid values must be finite and >= 0");
    }

    std::vector<int> unflatten(std::size_t k) const {
        std::vector<int> idx(dims.size());
        for (int a = dim() - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(k % dims[a]);
            k /= dims[a];
        }
        return idx;
    }
    std::size_t flatten(const std::vector<int>& idx) const {
        std::size_t k = 0;
        for (int a = 0; a < dim(); ++a) k = k * dims[a] + idx[a];
        return k;
    }
    Vec center(std::size_t k) const {
        auto idx = unflatten(k);
        Vec x(dim());
        for (int a = 0; a < dim(); ++a) x[a] = origin[a] + (idx[a] + 0.5) * spacing;
        return x;
    }
    double cell_volume() const { return std::pow(spacing, dim()); }

    /// Cell-center weights e^{-|x|_1} h^d of the exponential measure.
    std::vector<double> mu_weights() const {
        std::vector<double> w(size());
        const double cv = cell_volume();
        for (std::size_t k = 0; k < w.size(); ++k) w[k] = cv * std::exp(-center(k).lpNorm<1>());
        return w;
    }

    /// Samples g at cell centers.
    template <class G>
    static GridFunction sample(std::vector<double> o, double h, std::vector<int> n, const G& g) {
        GridFunction f(std::move(o), h, std::move(n));
        for (std::size_t k = 0; k < f.size(); ++k) f.values[k] = g(f.center(k));
        return f;
    }
};

// ---- serialization: JSON header {origin, spacing, dims} plus CSV "index,value" ----

inline nlohmann::json grid_header(const GridFunction& f) {
    return nlohmann::json{{"origin", f.origin}, {"spacing", f.spacing}, {"dims", f.dims}};
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string grid_csv(const GridFunction& f) {
    std::string out = "index,value\n";
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += fmt_double(f.values[k]);
        out += '\n';
    }
    return out;
}

inline GridFunction grid_from_text(const std::string& header_json, const std::string& csv) {
    auto h = nlohmann::json::parse(header_json);
    GridFunction f(h.at("origin").get<std::vector<double>>(), h.at("spacing").get<double>(),
                   h.at("dims").get<std::vector<int>>());
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    if (line.rfind("index", 0) != 0) throw std::invalid_argument("grid CSV must start with an index,value header");
    std::vector<bool> seen(f.size(), false);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("malformed grid CSV line: " + line);
        std::size_t k = std::stoull(line.substr(0, comma));
        if (k >= f.size()) throw std::invalid_argument("grid CSV index out of range");
        f.values[k] = std::stod(line.substr(comma + 1));
        seen[k] = true;
    }
    for (bool s : seen)
        if (!s) throw std::invalid_argument("grid CSV is missing entries");
    f.validate();
    return f;
}

/// Writes `<base>.json` and `<base>.csv`.
inline void save_grid(const GridFunction& f, const std::string& base) {
    std::ofstream(base + ".json") << grid_header(f).dump(2) << "\n";
    std::ofstream(base + ".csv") << grid_csv(f);
}

inline GridFunction load_grid(const std::string& base) {
    std::ifstream hj(base + ".json"), cv(base + ".csv");
    if (!hj || !cv) throw std::invalid_argument("cannot open grid files for " + base);
    std::stringstream a, b;
    a << hj.rdbuf();
    b << cv.rdbuf();
    return grid_from_text(a.str(), b.str());
}

}  // namespace mxlab
