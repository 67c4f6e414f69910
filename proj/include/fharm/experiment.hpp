#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fharm/fields.hpp"
#include "fharm/integrand.hpp"
#include "fharm/monotone.hpp"
#include "fharm/solver.hpp"
#include "fharm/strata.hpp"

namespace fharm {

struct ModelSpec {
    std::string kind = "dirichlet";  // dirichlet | paper_f1 | tabulated
    double beta = 0.5;
    double B = 1.0;
    double vartheta = 0.0;
    int n = 3;
    int q = 3;
    std::string table_path;  // CSV "p,F" for tabulated
    // A is calibrated from the energy bound unless given
    std::optional<double> A;
    double energy_bound = 10.0;
};

struct GridSpec {
    int n = 3;
    int dims = 64;  // nodes per axis
    double spacing = 2.0 / 63.0;
    std::string shape = "ball";  // ball | box; centred at the origin
};

struct MapSpec {
    std::string kind = "hedgehog";  // hedgehog | cylinder | two_hedgehogs | constant | circle | file
    double a = 0.4;                 // two_hedgehogs separation parameter
    double k = 1.0;                 // circle frequency
    std::string path;               // file
    double perturb = 0.0;           // amplitude of a seeded smooth interior perturbation
    std::string boundary = "hedgehog";  // hedgehog | keep_trace
};

struct SolveSpec {
    bool enabled = true;
    SolveConfig cfg;
    int residual_trials = 16;
};

struct AnalysisSpec {
    std::vector<Vec3> centers{Vec3::Zero()};
    int random_centers = 0;  // extra centres drawn uniformly where every radius fits
    double r_min = 0.15;
    double r_max = 0.6;
    int radii_count = 24;
    double eps_mollifier = 0.1;
    int flux_dirs = 1024;
};

struct StrataSpec {
    ThresholdConfig thresholds = [] {
        ThresholdConfig t;
        t.r0 = 0.15;
        return t;
    }();
    double detect_r_max = 0.6;
    int detect_radii = 4;
    double alpha = 0.5;          // regularity scale exponent
    int lattice = 3;             // lattice points per axis for stratification
    double lattice_extent = 0.4;
    int max_singular_points = 4; // singular points added to the stratified set
    double s_max = 0.4;
    int k = 0;                   // dimension for beta, covering and Minkowski
    double top_radius = 1.0;
    std::vector<double> minkowski_radii{0.05, 0.1, 0.2, 0.4};
    std::vector<double> beta_radii{0.15, 0.3};
};

struct ExperimentConfig {
    ModelSpec model;
    GridSpec grid;
    MapSpec initial;
    SolveSpec solve;
    AnalysisSpec analysis;
    StrataSpec strata;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    std::vector<std::string> stages{"solve", "analyze", "stratify", "beta", "cover"};
};

// Strict JSON reader: unknown keys and wrong types are rejected with the JSON
// path of the offending field (ConfigError).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate_config(const ExperimentConfig& cfg);
std::string config_to_json(const ExperimentConfig& cfg);
// FNV-1a 64 of the canonical JSON dump
std::uint64_t config_hash(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
ExperimentConfig preset_config(const std::string& name);

IntegrandModel build_model(const ModelSpec& spec);
GridDomain build_grid(const GridSpec& spec);
SphereMap build_initial_map(const ExperimentConfig& cfg, const GridDomain& grid);

// Runs the pipeline stages and writes their files into cfg.output_dir.
class Experiment {
public:
    explicit Experiment(ExperimentConfig cfg);

    const ExperimentConfig& config() const { return cfg_; }
    const IntegrandModel& model() const { return model_; }
    const SphereMap& map() const { return map_; }
    // replaces the working map (e.g. a saved map file)
    void set_map(SphereMap u);

    SolveReport solve_stage();
    MonotonicityReport analyze_stage();
    void stratify_stage();
    void beta_stage();
    void cover_stage();
    AssumptionReport verify_stage();
    // stages listed in the config, then the manifest
    void run();
    void write_manifest() const;

    const DetectionResult& detection();

private:
    DensityAnalyzer& analyzer();
    std::filesystem::path out(const std::string& name) const;
    void record(const std::string& name);

    ExperimentConfig cfg_;
    IntegrandModel model_;
    GridDomain grid_;
    SphereMap map_;
    std::unique_ptr<DensityAnalyzer> analyzer_;
    std::optional<DetectionResult> detection_;
    std::vector<std::string> files_;
    std::vector<std::string> stages_run_;
};

extern const char* const kVersion;

}  // namespace fharm
