#pragma once

// Experiment orchestration: seeded field generators with certified majorants,
// ensemble runs of the Korn and rigidity pipelines, frozen-fixture
// bookkeeping, and report emission (CSV, JSON, SVG).

#include "rigidlab/common.hpp"
#include "rigidlab/field.hpp"
#include "rigidlab/grid.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace rigidlab {

// Displacement noise on top of a rigid (or skew) base motion. The tail part
// is a sparse field of localized bumps with heavy-tailed amplitudes and feeds
// the low-exponent majorant; the smooth part is a low-frequency oscillation
// and feeds the high-exponent majorant.
struct NoiseModel {
  double base_angle = 0.4;
  std::array<double, 3> base_shift{0.1, -0.2, 0.05};
  double tail_amplitude = 0.0;
  double tail_exponent = 1.5;    // Pareto shape of the spike amplitudes
  double part_amplitude = 0.0;
  double spike_density = 0.01;   // expected fraction of cells carrying a bump
};

NoiseModel noise_from_json(const nlohmann::json& j);
nlohmann::json noise_to_json(const NoiseModel& m);

// Which defect the majorants certify: |Eu| for the Korn pipeline (skew base
// motion), dist(Du, SO(n)) for the rigidity pipeline (rotation base).
enum class MajorantTarget { symmetric, rotation };

struct GeneratedField {
  VectorField u;
  std::vector<ScalarField> majorants;
  MatN base;              // S0 (symmetric target) or Q0 (rotation target)
  nlohmann::json stats;   // spike count, sup |Du|, defect sup, margin
};

// Builds u = base motion + perturbation and splits the measured defect field
// across nslots majorants by the perturbation structure, so the majorization
// holds with equality cell by cell. The certificate is asserted, not assumed;
// a violation is a generator bug and raises a contract error.
GeneratedField generate_field(const NoiseModel& model, std::uint64_t seed,
                              const std::shared_ptr<const GridDomain>& dom, std::size_t nslots,
                              MajorantTarget target);

struct ExperimentConfig {
  std::string kind = "square";
  double size = 1.0;
  double lipschitz_l = 0.5;
  int dim = 2;
  std::vector<int> resolutions{32};
  std::vector<double> exponents{1.5, 3.0};
  std::string pipeline = "rigidity";   // "korn", "rigidity", or "lipschitz"
  int ensemble = 8;
  NoiseModel noise;
  std::uint64_t seed = 1;
  std::string outdir = ".";
  std::string fixture_mode = "record";  // "record" or "assert"
  std::string fixture_path;             // defaults to outdir/fixture.json
  double fixture_band = 1.0;            // 1.0 exact replay, 1.05 cross-platform
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

struct RunRow {
  std::uint64_t seed = 0;
  int resolution = 0;
  std::string branch;
  std::vector<double> ratios;       // per exponent slot
  double reconstruction = 0.0;
  double recovery = 0.0;            // |recovered constant - planted base|
  nlohmann::json telemetry;
};

struct ConstantReport {
  nlohmann::json config;
  std::vector<RunRow> rows;         // ordered by (resolution, seed)
  nlohmann::json aggregates;        // per-resolution max/median ratios, deltas, verdicts
};

// Runs the configured pipeline over the ensemble (parallel, deterministic
// ordered reduce). Record mode freezes max ratios per resolution and slot
// into the fixture file; assert mode fails with the offending seed and branch
// if any run ratio exceeds fixture * band.
ConstantReport run_experiment(const ExperimentConfig& config);

nlohmann::json report_to_json(const ConstantReport& report);
std::string report_to_csv(const ConstantReport& report);
std::string report_to_svg(const ConstantReport& report);

// Writes report.{csv,json,svg} for the requested formats into outdir.
std::vector<std::string> emit_report(const ConstantReport& report,
                                     const std::vector<std::string>& formats,
                                     const std::string& outdir);

}  // namespace rigidlab
