#include "qgs/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qgs/grid.hpp"

namespace qgs {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, int line, const std::string& key) {
    try {
        size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) fail(line, key + ": trailing characters in '" + v + "'");
        if (!std::isfinite(x)) fail(line, key + ": value must be finite");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(line, key + ": expected a number, got '" + v + "'");
    }
}

long parse_int(const std::string& v, int line, const std::string& key) {
    try {
        size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) fail(line, key + ": trailing characters in '" + v + "'");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(line, key + ": expected an integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    fail(line, key + ": expected on/off, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& v, int line, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) fail(line, key + ": empty list entry");
        out.push_back(parse_double(item, line, key));
    }
    if (out.empty()) fail(line, key + ": empty list");
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    bool seen_z_star0 = false;

    std::stringstream ss(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        raw = trim(raw);
        if (raw.empty()) continue;

        const auto eq = raw.find('=');
        if (eq == std::string::npos) fail(lineno, "expected 'key = value', got '" + raw + "'");
        const std::string key = trim(raw.substr(0, eq));
        const std::string val = trim(raw.substr(eq + 1));
        if (key.empty()) fail(lineno, "empty key");
        if (val.empty()) fail(lineno, key + ": empty value");

        if (key == "selection.kind") {
            if (val == "quadratic")
                c.kind = SelectionKind::quadratic;
            else if (val == "polynomial")
                c.kind = SelectionKind::polynomial;
            else if (val == "double_well")
                c.kind = SelectionKind::double_well;
            else
                fail(lineno, "selection.kind: unknown kind '" + val + "'");
        } else if (key == "selection.coeffs") {
            c.coeffs = parse_list(val, lineno, key);
        } else if (key == "selection.z0") {
            c.z0 = parse_double(val, lineno, key);
        } else if (key == "z_star0") {
            c.z_star0 = parse_double(val, lineno, key);
            seen_z_star0 = true;
        } else if (key == "epsilon") {
            c.epsilon = parse_list(val, lineno, key);
            for (double e : c.epsilon)
                if (!(e > 0.0)) fail(lineno, "epsilon: entries must be > 0");
        } else if (key == "grid.zmin") {
            c.zmin = parse_double(val, lineno, key);
        } else if (key == "grid.zmax") {
            c.zmax = parse_double(val, lineno, key);
        } else if (key == "grid.n") {
            const long n = parse_int(val, lineno, key);
            if (n < 16 || (n & (n - 1)) != 0)
                fail(lineno, "grid.n: must be a power of two >= 16");
            c.n = static_cast<int>(n);
        } else if (key == "time.t_end") {
            c.t_end = parse_double(val, lineno, key);
            if (!(c.t_end > 0.0)) fail(lineno, "time.t_end: must be > 0");
        } else if (key == "time.dt_factor") {
            c.dt_factor = parse_double(val, lineno, key);
            if (!(c.dt_factor > 0.0 && c.dt_factor <= 0.2))
                fail(lineno, "time.dt_factor: stability requires 0 < dt_factor <= 0.2");
        } else if (key == "time.snapshot_every") {
            c.snapshot_every = parse_double(val, lineno, key);
            if (!(c.snapshot_every > 0.0)) fail(lineno, "time.snapshot_every: must be > 0");
        } else if (key == "alpha") {
            c.alpha = parse_double(val, lineno, key);
            if (!(c.alpha > 0.0 && c.alpha < alpha_max()))
                fail(lineno, "alpha: admissibility requires 0 < alpha < 2 - ln3/ln2 = " +
                                 std::to_string(alpha_max()));
        } else if (key == "operator.backend") {
            if (val == "fft")
                c.backend = Backend::fft;
            else if (val == "direct")
                c.backend = Backend::direct;
            else
                fail(lineno, "operator.backend: expected fft or direct, got '" + val + "'");
        } else if (key == "operator.quad_order") {
            const long q = parse_int(val, lineno, key);
            if (q < 2 || q > 200) fail(lineno, "operator.quad_order: must be in [2, 200]");
            c.quad_order = static_cast<int>(q);
        } else if (key == "init.q0") {
            c.q0 = parse_double(val, lineno, key);
        } else if (key == "init.p0") {
            c.p0 = parse_double(val, lineno, key);
        } else if (key == "init.lambda0") {
            c.lambda0 = parse_double(val, lineno, key);
        } else if (key == "init.vstar") {
            c.init_vstar = parse_bool(val, lineno, key);
        } else if (key == "out_dir") {
            c.out_dir = val;
        } else {
            fail(lineno, "unknown key '" + key + "'");
        }
    }

    if (!seen_z_star0) c.z_star0 = c.z0;
    if (!(c.zmin < c.zmax)) throw ConfigError("config: grid.zmin must be < grid.zmax");
    if (!(c.snapshot_every <= c.t_end + 1e-12))
        throw ConfigError("config: time.snapshot_every must not exceed time.t_end");
    if (c.coeffs.empty()) throw ConfigError("config: selection.coeffs must be nonempty");

    selection_from(c);  // surface coefficient-count errors at parse time
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

SelectionModel selection_from(const RunConfig& c) {
    try {
        return make_selection(c.kind, c.coeffs, c.z0);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::string resolved_config_text(const RunConfig& c) {
    std::stringstream out;
    auto num = [](double x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    out << "selection.kind = "
        << (c.kind == SelectionKind::quadratic
                ? "quadratic"
                : (c.kind == SelectionKind::polynomial ? "polynomial" : "double_well"))
        << "\n";
    out << "selection.coeffs = ";
    for (size_t i = 0; i < c.coeffs.size(); ++i)
        out << (i ? "," : "") << num(c.coeffs[i]);
    out << "\n";
    out << "selection.z0 = " << num(c.z0) << "\n";
    out << "z_star0 = " << num(c.z_star0) << "\n";
    out << "epsilon = ";
    for (size_t i = 0; i < c.epsilon.size(); ++i)
        out << (i ? "," : "") << num(c.epsilon[i]);
    out << "\n";
    out << "grid.zmin = " << num(c.zmin) << "\n";
    out << "grid.zmax = " << num(c.zmax) << "\n";
    out << "grid.n = " << c.n << "\n";
    out << "time.t_end = " << num(c.t_end) << "\n";
    out << "time.dt_factor = " << num(c.dt_factor) << "\n";
    out << "time.snapshot_every = " << num(c.snapshot_every) << "\n";
    out << "alpha = " << num(c.alpha) << "\n";
    out << "operator.backend = " << (c.backend == Backend::fft ? "fft" : "direct") << "\n";
    out << "operator.quad_order = " << c.quad_order << "\n";
    out << "init.q0 = " << num(c.q0) << "\n";
    out << "init.p0 = " << num(c.p0) << "\n";
    out << "init.lambda0 = " << num(c.lambda0) << "\n";
    out << "init.vstar = " << (c.init_vstar ? "on" : "off") << "\n";
    out << "out_dir = " << c.out_dir << "\n";
    return out.str();
}

}  // namespace qgs
