#pragma once

// Command-line front end: run configuration, subcommands and run manifests.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "slicedssm/data.hpp"
#include "slicedssm/forecast.hpp"
#include "slicedssm/gibbs.hpp"
#include "slicedssm/simulate.hpp"

namespace slicedssm {

enum class Variant { ssm, mssm, ols };

Variant parse_variant(const std::string& name);
std::string to_string(Variant variant);

/// Everything a run depends on. Resolved from defaults, then a JSON config
/// file, then command-line flags.
struct RunConfig {
    std::optional<std::string> counts;
    std::optional<std::string> losses;
    std::optional<std::string> panel;
    std::optional<std::string> chain;
    std::string state;
    int k = 3;
    TransformSpec transform;
    /// Fit mu_x / sigma_x to the loss file (pooled over states); false keeps
    /// the values in `transform`.
    bool estimate_scale = true;
    SliceSpec slice;
    PriorSpec prior;
    int n_iter = 5000;
    int burn_in = 2000;
    /// "first_obs" (level at the first response, zero slope), "zero", or an
    /// explicit pair.
    std::string alpha0_mode = "first_obs";
    Eigen::Vector2d alpha0 = Eigen::Vector2d::Zero();
    std::optional<int> t0_first;
    std::optional<int> t0_last;
    int crps_nodes = kDefaultCrpsNodes;
    unsigned threads = 0;
    bool warm_start = false;
    Variant variant = Variant::mssm;
    std::uint64_t seed = 1;
    std::string out = ".";
    DgpSpec dgp = default_dgp();
    YearMonth sim_start{2000, 1};

    /// Simulation defaults for the CLI: the threshold-study values with the
    /// covariate entering at lag 3.
    static DgpSpec default_dgp();
};

/// JSON echo of a resolved configuration (output directory excluded).
std::string config_json(const RunConfig& config);

/// Overlays a JSON config (or a run manifest's "config" object) onto `base`.
RunConfig parse_config_json(const std::string& text, RunConfig base = {});

/// Runs one invocation; args exclude the program name. Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace slicedssm
