#pragma once

// Command-line surface: experiment configuration (flags, ini files,
// manifests), command execution and artifact writing.

#include "quadray/angles.hpp"
#include "quadray/bunch_analysis.hpp"
#include "quadray/external_rays.hpp"
#include "quadray/pressure.hpp"
#include "quadray/scene.hpp"
#include "quadray/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace quadray {

inline constexpr const char* kSchemaVersion = "v1";

/// Bad flags, unknown configuration keys, malformed literals. Exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// The commands run_command understands.
const std::vector<std::string>& command_names();

/// basilica -1, chebyshev -2, airplane_root -7/4,
/// golden_siegel lambda/2 - lambda^2/4 with lambda = exp(2 pi i (sqrt5 - 1)/2).
cplx preset_parameter(std::string_view name);

/// "re,im" (a bare real is accepted, imaginary part 0).
cplx parse_complex(std::string_view text);

/// "start:stop:step" inclusive of stop within half a step, or a comma list.
std::vector<double> parse_t_grid(std::string_view text);

std::vector<Angle> parse_angle_list(std::string_view text);
std::vector<double> parse_real_list(std::string_view text);

/// Fully resolved parameters of one run; every field lands in the manifest.
struct ExperimentConfig {
    std::string command;
    std::string preset; // empty when c was given literally
    cplx c{0.0, 0.0};
    int n = 10;
    std::optional<int> n_min;     // bunches: sweep n_min..n
    int period = 1;               // period of the base cycle (portrait, near-point, disc-pattern, distortion)
    std::string t = "0:2:0.5";    // pressure grid
    std::optional<cplx> z;        // pressure basepoint, near-point z0, distortion center
    std::string fixed;            // "", "alpha" or "beta": use that fixed point as z
    std::vector<double> delta{0.1};
    std::string mode = "H";       // bunches: H or BMS
    double r = 1e-4;              // BMS threshold, distortion radius
    double r0 = 0.5;
    double C = 2.0;
    int orbit_index = 0;
    std::size_t samples = kDefaultDistortionSamples;
    std::string alpha = "golden"; // bryuno: decimal literal or "golden"
    std::string quotients;        // bryuno: comma list of partial quotients, overrides alpha
    int terms = 30;
    std::string angles;           // rays, render: comma list of num/den
    bool minimal_only = true;     // orbits
    std::size_t julia_points = 100000;
    std::string grid;             // render: "WxH" escape-time grid, empty for none
    int grid_iter = 200;
    std::optional<Viewport> viewport;
    int marker_period = 0;        // render: mark cycles of this minimal period
    int bunch_n = 0;              // render: highlight bunches of this period
    std::string search = "automatic";
    PrecisionConfig precision;
    std::string output_dir = "quadray_out";
    std::uint64_t seed = 1;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// Keys accepted by a command (flag names without dashes).
std::vector<std::string> keys_for_command(const std::string& command);

/// Sets one key from its text form. Throws UsageError for keys the command
/// does not accept or values that do not parse.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Ini file with sections [run] and [precision]; unknown sections or keys are
/// rejected.
void apply_ini_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Runs cfg.command and writes its artifacts plus manifest.json into
/// cfg.output_dir. Returns the artifact file names (manifest excluded).
std::vector<std::string> execute(const ExperimentConfig& cfg);

/// Parses argv, runs, maps errors to exit codes 0/1/2. Messages go to err.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace quadray
