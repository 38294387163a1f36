#pragma once

#include "pomap/decomp.hpp"
#include "pomap/dualdec.hpp"
#include "pomap/lpsolve.hpp"
#include "pomap/persist.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pomap {

// Counter-based SplitMix64: draw k of stream (seed, stream) is mix(key + (k+1)·γ)
// with key = mix(seed ^ mix(stream)). Streams are independent of call order.
class SplitMix64 {
public:
   SplitMix64(std::uint64_t seed, std::uint64_t stream);
   std::uint64_t next();
   // Uniform in [0, 1) with 53 random bits.
   double uniform();

   static std::uint64_t mix(std::uint64_t z);

private:
   std::uint64_t key_;
   std::uint64_t counter_ = 0;
};

enum class RejectionMode { require_fractional, any };
enum class PotentialKind { independent, submodular };
enum class DecompositionKind { grid_forests, edges };

const char* to_string(RejectionMode m);
const char* to_string(PotentialKind k);
const char* to_string(DecompositionKind k);
RejectionMode rejection_mode_from_string(const std::string& s);
PotentialKind potential_kind_from_string(const std::string& s);
DecompositionKind decomposition_kind_from_string(const std::string& s);

struct ExperimentConfig {
   std::size_t rows = 5;
   std::size_t cols = 5;
   std::size_t labels = 2;
   std::uint64_t seed = 0;
   double weight_lo = -0.5;
   double weight_hi = 0.5;
   RejectionMode rejection = RejectionMode::require_fractional;
   std::size_t rejection_limit = 10000;
   PotentialKind potential = PotentialKind::independent;
   DecompositionKind decomposition = DecompositionKind::grid_forests;
   DualSolverConfig dual;
   std::string output_dir;   // empty: no artifacts
   bool oracle = false;
   std::uint64_t oracle_cap = default_state_cap;
   std::size_t workers = 1;

   void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Weights are quantised to multiples of 1e-6 so the exact view of each weight is
// the decimal the generator meant.
double quantize_weight(double w);

// Zero-unary grid model. Node r·cols + c; edges to the right then down, each with
// an independent L×L table of weights from [lo, hi]. Submodular tables (binary
// only) draw the diagonal from [lo, 0] and the off-diagonal from [0, hi].
MrfModel draw_grid_model(const ExperimentConfig& cfg, std::uint64_t attempt);

struct GeneratedInstance {
   MrfModel model;
   std::size_t rejections = 0;
   std::optional<LpSolution> lp;   // solved during rejection sampling
};

// In require-fractional mode redraws (attempt = 0, 1, ...) until the LP optimum
// has a fractional node; throws rejection_limit after `rejection_limit` rejections.
GeneratedInstance generate_ising(const ExperimentConfig& cfg);

Decomposition make_decomposition(const MrfModel& model, DecompositionKind kind, std::size_t rows, std::size_t cols);

struct PipelineResult {
   GeneratedInstance instance;
   LpSolution lp;
   DualState<double> dual;
   PersistencyReport report;           // certified LP dual
   PersistencyReport subgradient;      // subgradient dual, gated
   nlohmann::json json;
   bool all_pass = false;
};

nlohmann::json dual_state_to_json(const Decomposition& d, const DualState<double>& state, const LpSolution* lp);

// generate → LP (with uniqueness) → decompose → subgradient → checks, and the
// artifacts when cfg.output_dir is set. Stage failures are rethrown with the stage name.
PipelineResult run_pipeline(const ExperimentConfig& cfg);

// Same stages on a given model (no generation).
PipelineResult run_pipeline(const ExperimentConfig& cfg, const MrfModel& model);

struct BatchRow {
   std::uint64_t seed;
   std::size_t rejections;
   bool unique;
   std::size_t integral;
   std::size_t unambiguous;
   double dual_gap;
   CheckResult theorem1, theorem2, theorem3, lemma_c1, strong_persistency;
   bool all_pass;
};

struct BatchSummary {
   std::vector<BatchRow> rows;
   // [check][pass, fail, not-applicable]
   std::vector<std::array<std::size_t, 3>> counts;
};

inline const std::vector<std::string>& batch_check_names()
{
   static const std::vector<std::string> names{"theorem1", "theorem2", "theorem3", "lemma_c1", "strong_persistency"};
   return names;
}

// Seeds first_seed .. first_seed + count - 1, spread over cfg.workers threads.
BatchSummary run_batch(const ExperimentConfig& cfg, std::uint64_t first_seed, std::size_t count);

std::string batch_table(const BatchSummary& s);
void write_batch_csv(std::ostream& out, const BatchSummary& s);
nlohmann::json batch_to_json(const BatchSummary& s);

} // namespace pomap
