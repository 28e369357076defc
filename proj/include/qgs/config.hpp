// Flat dotted-key run configuration: parsing, defaults, validation.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qgs/operator.hpp"
#include "qgs/selection.hpp"

namespace qgs {

struct RunConfig {
    SelectionKind kind = SelectionKind::quadratic;
    std::vector<double> coeffs{1.0};
    double z0 = 0.0;
    double z_star0 = 0.0;          // initial dominant trait, defaults to z0
    std::vector<double> epsilon{0.1};  // more than one entry selects sweep mode
    double zmin = -2.0;
    double zmax = 2.0;
    int n = 512;
    double t_end = 5.0;
    double dt_factor = 0.1;        // dt = dt_factor * eps^2
    double snapshot_every = 0.25;
    double alpha = 0.4;
    Backend backend = Backend::fft;
    int quad_order = 40;
    double q0 = 0.0;
    double p0 = 0.0;
    double lambda0 = 0.0;
    bool init_vstar = true;
    std::string out_dir = "out";
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// `section.key = value` lines, `#` comments. Unknown keys, malformed values
// and violated invariants throw ConfigError naming the line.
RunConfig parse_config(const std::string& text);

RunConfig load_config_file(const std::string& path);

SelectionModel selection_from(const RunConfig& c);

// canonical echo of every resolved field, for meta.txt and determinism tests
std::string resolved_config_text(const RunConfig& c);

}  // namespace qgs
