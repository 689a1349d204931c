#pragma once

// File formats: parameter JSON, CSV tables, model JSON and run manifests.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ompath/carbon.hpp"
#include "ompath/dynamics.hpp"
#include "ompath/errors.hpp"
#include "ompath/mlp.hpp"
#include "ompath/path.hpp"
#include "ompath/shooting.hpp"

namespace ompath {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

// ---- parameters ------------------------------------------------------------

inline CarbonParams params_from_json(const Json& j)
{
    if (!j.is_object()) throw ConfigError("parameter file must hold a JSON object");
    auto get = [&](const char* key, bool strictly_positive) {
        if (!j.contains(key)) throw ConfigError(std::string("parameter file: missing key '") + key + "'");
        if (!j[key].is_number()) throw ConfigError(std::string("parameter file: key '") + key + "' must be a number");
        const double v = j[key].get<double>();
        if (strictly_positive ? !(v > 0.0) : !(v >= 0.0)) {
            throw ConfigError(std::string("parameter file: key '") + key + "' must be "
                              + (strictly_positive ? "positive" : "non-negative"));
        }
        return v;
    };
    CarbonParams p;
    p.mu = get("mu", true);
    p.b_burial = get("b", true);
    p.theta = get("theta", true);
    p.nu = get("nu", false);
    p.c_p = get("c_p", true);
    p.c_x = get("c_x", true);
    p.c_f = get("c_f", true);
    p.w0 = get("w0", true);
    p.gamma = get("gamma", true);
    p.beta = get("beta", true);
    p.f0 = get("f0", true);
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const char* known[] = {"mu", "b", "theta", "nu", "c_p", "c_x", "c_f", "w0", "gamma", "beta", "f0"};
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; })
            == std::end(known)) {
            throw ConfigError("parameter file: unknown key '" + it.key() + "'");
        }
    }
    p.validate();
    return p;
}

inline Json params_to_json(const CarbonParams& p)
{
    return Json{{"mu", p.mu},   {"b", p.b_burial}, {"theta", p.theta}, {"nu", p.nu},
                {"c_p", p.c_p}, {"c_x", p.c_x},    {"c_f", p.c_f},     {"w0", p.w0},
                {"gamma", p.gamma}, {"beta", p.beta}, {"f0", p.f0}};
}

inline Json read_json(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open '" + file.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("'" + file.string() + "' is not valid JSON: " + e.what());
    }
}

inline CarbonParams load_params(const std::filesystem::path& file) { return params_from_json(read_json(file)); }

inline void write_json(const std::filesystem::path& file, const Json& j)
{
    std::ofstream out(file, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + file.string() + "'");
    out << j.dump(2) << '\n';
}

// ---- CSV ---------------------------------------------------------------------

/// Shortest text that reads back to the same double.
inline std::string fmt(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header)
        : out_(file, std::ios::binary), file_(file)
    {
        if (!out_) throw ConfigError("cannot write '" + file.string() + "'");
        row(header);
    }

    void row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    template <typename... Ts>
    void values(const Ts&... xs)
    {
        std::vector<std::string> cells;
        (cells.push_back(cell(xs)), ...);
        row(cells);
    }

private:
    static std::string cell(double x) { return fmt(x); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(bool b) { return b ? "1" : "0"; }
    template <typename I>
        requires std::is_integral_v<I>
    static std::string cell(I i)
    {
        return std::to_string(i);
    }

    std::ofstream out_;
    std::filesystem::path file_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw ConfigError("CSV has no column '" + name + "'");
    }
    bool has(const std::string& name) const
    {
        return std::find(header.begin(), header.end(), name) != header.end();
    }
};

inline CsvTable read_csv(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open '" + file.string() + "'");
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    if (!std::getline(in, line)) throw ConfigError("'" + file.string() + "' is empty");
    t.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw ConfigError(file.string() + ":" + std::to_string(lineno) + ": expected "
                              + std::to_string(t.header.size()) + " fields");
        }
        std::vector<double> r;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (end == c.c_str()) {
                throw ConfigError(file.string() + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
            }
            r.push_back(v);
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

// ---- domain tables -------------------------------------------------------------

inline void write_cycle_csv(const std::filesystem::path& file, const LimitCycle& cyc)
{
    CsvWriter w(file, {"index", "t", "c", "w"});
    const double dt = cyc.period / static_cast<double>(cyc.points.size());
    for (std::size_t i = 0; i < cyc.points.size(); ++i) {
        w.values(i, dt * static_cast<double>(i), cyc.points[i].x, cyc.points[i].y);
    }
}

inline Json fixed_point_json(const FixedPointReport& fp)
{
    return Json{{"c", fp.location.x},
                {"w", fp.location.y},
                {"eig_re", {fp.eigenvalues[0].real(), fp.eigenvalues[1].real()}},
                {"eig_im", {fp.eigenvalues[0].imag(), fp.eigenvalues[1].imag()}},
                {"stable", fp.stable}};
}

/// Path CSV with columns t,c,w,vc,vw; velocities by finite differences when
/// the path does not carry them.
inline void write_path_csv(const std::filesystem::path& file, const Path& p)
{
    const auto v = p.has_velocities() ? p.velocities : finite_difference_velocities(p.states, p.dt);
    CsvWriter w(file, {"t", "c", "w", "vc", "vw"});
    for (std::size_t i = 0; i < p.size(); ++i) {
        w.values(p.time(i), p.states[i].x, p.states[i].y, v[i].x, v[i].y);
    }
}

inline void write_trajectory_csv(const std::filesystem::path& file, const Path& p)
{
    CsvWriter w(file, {"t", "c", "w"});
    for (std::size_t i = 0; i < p.size(); ++i) w.values(p.time(i), p.states[i].x, p.states[i].y);
}

/// Reads a path CSV with at least t,c,w on a uniform grid.
inline Path read_path_csv(const std::filesystem::path& file)
{
    const CsvTable t = read_csv(file);
    const std::size_t it = t.column("t"), ic = t.column("c"), iw = t.column("w");
    if (t.rows.size() < 3) throw ConfigError("path CSV needs at least 3 rows");
    Path p;
    p.t0 = t.rows.front()[it];
    p.dt = (t.rows.back()[it] - p.t0) / static_cast<double>(t.rows.size() - 1);
    if (!(p.dt > 0.0)) throw ConfigError("path CSV times must increase");
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        const double expect = p.t0 + p.dt * static_cast<double>(k);
        if (std::abs(t.rows[k][it] - expect) > 1e-6 * std::max(1.0, std::abs(expect))) {
            throw ConfigError("path CSV time grid is not uniform at row " + std::to_string(k + 1));
        }
        p.states.push_back({t.rows[k][ic], t.rows[k][iw]});
    }
    return p;
}

inline void write_dataset_csv(const std::filesystem::path& file, const ShootDataset& ds)
{
    CsvWriter w(file, {"vx", "vy", "end_c", "end_w"});
    for (const auto& r : ds.records) w.values(r.v0.x, r.v0.y, r.endpoint.x, r.endpoint.y);
}

inline Json dataset_meta_json(const ShootDataset& ds)
{
    return Json{{"z_star", {ds.z_star.x, ds.z_star.y}},
                {"T", ds.horizon},
                {"nu", ds.nu},
                {"dt", ds.dt},
                {"scheme", to_string(ds.scheme)},
                {"velocity_box", {{"center", {ds.box.center.x, ds.box.center.y}},
                                  {"half_width", {ds.box.half_width.x, ds.box.half_width.y}}}},
                {"drawn", ds.drawn},
                {"retained", ds.records.size()},
                {"retention", ds.retention()}};
}

/// Dataset from a CSV plus its metadata JSON.
inline ShootDataset read_dataset(const std::filesystem::path& csv, const Json& meta)
{
    ShootDataset ds;
    const CsvTable t = read_csv(csv);
    const std::size_t a = t.column("vx"), b = t.column("vy"), c = t.column("end_c"), d = t.column("end_w");
    for (const auto& r : t.rows) ds.records.push_back({{r[a], r[b]}, {r[c], r[d]}});
    ds.drawn = meta.value("drawn", ds.records.size());
    ds.horizon = meta.value("T", 0.0);
    ds.nu = meta.value("nu", 0.0);
    ds.dt = meta.value("dt", 0.0);
    ds.scheme = parse_scheme(meta.value("scheme", std::string("euler")));
    if (meta.contains("z_star")) ds.z_star = {meta["z_star"][0].get<double>(), meta["z_star"][1].get<double>()};
    return ds;
}

inline void write_targets_csv(const std::filesystem::path& file, const std::vector<TargetRow>& table)
{
    CsvWriter w(file, {"index", "target_c", "target_w", "vx", "vy", "end_c", "end_w", "distance", "reachable",
                       "action"});
    for (const auto& r : table) {
        w.values(r.index, r.target.x, r.target.y, r.v0.x, r.v0.y, r.endpoint.x, r.endpoint.y, r.distance,
                 r.reachable, r.action);
    }
}

// ---- model -------------------------------------------------------------------

inline Json model_to_json(const Mlp& net)
{
    Json layers = Json::array();
    for (std::size_t l = 0; l < net.layers(); ++l) {
        const auto w = net.weights(l);
        const auto b = net.biases(l);
        layers.push_back(Json{{"weights", std::vector<double>(w.begin(), w.end())},
                              {"biases", std::vector<double>(b.begin(), b.end())}});
    }
    return Json{{"layer_sizes", net.sizes()},
                {"activation", "tanh"},
                {"seed", net.seed()},
                {"layers", layers},
                {"input_norm", {{"mean", net.input_norm.mean}, {"scale", net.input_norm.scale}}},
                {"output_norm", {{"mean", net.output_norm.mean}, {"scale", net.output_norm.scale}}}};
}

inline Mlp model_from_json(const Json& j)
{
    try {
        const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        std::vector<std::vector<double>> w, b;
        for (const auto& l : j.at("layers")) {
            w.push_back(l.at("weights").get<std::vector<double>>());
            b.push_back(l.at("biases").get<std::vector<double>>());
        }
        Mlp net = Mlp::from_layers(sizes, w, b, j.value("seed", std::uint64_t{0}));
        net.input_norm.mean = j.at("input_norm").at("mean").get<std::vector<double>>();
        net.input_norm.scale = j.at("input_norm").at("scale").get<std::vector<double>>();
        net.output_norm.mean = j.at("output_norm").at("mean").get<std::vector<double>>();
        net.output_norm.scale = j.at("output_norm").at("scale").get<std::vector<double>>();
        return net;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("model JSON: ") + e.what());
    }
}

// ---- manifest ------------------------------------------------------------------

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::string config_path;
    Json parameters = Json::object();
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string tool_version = kToolVersion;
    double wall_clock_seconds = 0.0;
    std::vector<std::string> outputs;
    std::string status = "ok";

    Json to_json() const
    {
        return Json{{"command", command},
                    {"argv", argv},
                    {"config", config_path},
                    {"parameters", parameters},
                    {"seed", seed},
                    {"out_dir", out_dir},
                    {"tool_version", tool_version},
                    {"wall_clock_seconds", wall_clock_seconds},
                    {"outputs", outputs},
                    {"status", status}};
    }
};

}  // namespace ompath
