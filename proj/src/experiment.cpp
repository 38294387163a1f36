#include "pomap/experiment.hpp"

#include "pomap/parallel.hpp"
#include "pomap/render.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pomap {

namespace {

constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;

template <class F>
auto in_stage(const char* name, F&& body) -> decltype(body())
{
   try {
      return body();
   } catch (const Error& e) {
      if (!e.stage().empty()) throw;
      throw e.with_stage(name);
   }
}

} // namespace

SplitMix64::SplitMix64(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + golden))) {}

std::uint64_t SplitMix64::mix(std::uint64_t z)
{
   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
   z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
   return z ^ (z >> 31);
}

std::uint64_t SplitMix64::next()
{
   ++counter_;
   return mix(key_ + counter_ * golden);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

const char* to_string(RejectionMode m) { return m == RejectionMode::any ? "any" : "require-fractional"; }
const char* to_string(PotentialKind k) { return k == PotentialKind::submodular ? "submodular" : "independent"; }
const char* to_string(DecompositionKind k) { return k == DecompositionKind::edges ? "edges" : "grid-forests"; }

RejectionMode rejection_mode_from_string(const std::string& s)
{
   if (s == "require-fractional") return RejectionMode::require_fractional;
   if (s == "any") return RejectionMode::any;
   throw Error(ErrorCode::invalid_argument, "unknown rejection mode '" + s + "'");
}

PotentialKind potential_kind_from_string(const std::string& s)
{
   if (s == "independent") return PotentialKind::independent;
   if (s == "submodular") return PotentialKind::submodular;
   throw Error(ErrorCode::invalid_argument, "unknown potential kind '" + s + "'");
}

DecompositionKind decomposition_kind_from_string(const std::string& s)
{
   if (s == "grid-forests" || s == "grid") return DecompositionKind::grid_forests;
   if (s == "edges") return DecompositionKind::edges;
   throw Error(ErrorCode::invalid_argument, "unknown decomposition '" + s + "'");
}

void ExperimentConfig::validate() const
{
   if (rows < 1 || cols < 1) throw Error(ErrorCode::invalid_argument, "grid needs at least one row and one column");
   if (labels < 2) throw Error(ErrorCode::invalid_argument, "need at least two labels");
   if (!(weight_lo < weight_hi) || !std::isfinite(weight_lo) || !std::isfinite(weight_hi))
      throw Error(ErrorCode::invalid_argument, "weight interval needs lo < hi");
   if (potential == PotentialKind::submodular && (labels != 2 || !(weight_lo < 0 && weight_hi > 0)))
      throw Error(ErrorCode::invalid_argument, "submodular tables need two labels and lo < 0 < hi");
   if (workers < 1) throw Error(ErrorCode::invalid_argument, "need at least one worker");
   dual.validate();
}

nlohmann::json config_to_json(const ExperimentConfig& cfg)
{
   return {{"rows", cfg.rows},
           {"cols", cfg.cols},
           {"labels", cfg.labels},
           {"seed", cfg.seed},
           {"rng", "splitmix64"},
           {"weight_interval", {cfg.weight_lo, cfg.weight_hi}},
           {"rejection", to_string(cfg.rejection)},
           {"rejection_limit", cfg.rejection_limit},
           {"potential", to_string(cfg.potential)},
           {"decomposition", to_string(cfg.decomposition)},
           {"dual",
            {{"max_iters", cfg.dual.max_iters},
             {"step", to_string(cfg.dual.step.kind)},
             {"constant", cfg.dual.step.constant},
             {"a", cfg.dual.step.a},
             {"b", cfg.dual.step.b},
             {"polyak_scale", cfg.dual.step.polyak_scale},
             {"gap_tolerance", cfg.dual.gap_tolerance},
             {"stagnation_window", cfg.dual.stagnation_window}}},
           {"oracle", cfg.oracle},
           {"oracle_cap", cfg.oracle_cap}};
}

double quantize_weight(double w) { return std::round(w * 1e6) / 1e6; }

MrfModel draw_grid_model(const ExperimentConfig& cfg, std::uint64_t attempt)
{
   cfg.validate();
   const std::size_t L = cfg.labels;
   MrfModel model(cfg.rows * cfg.cols, L);
   SplitMix64 rng(cfg.seed, attempt);
   auto draw = [&](double lo, double hi) { return quantize_weight(lo + (hi - lo) * rng.uniform()); };
   std::vector<double> table(L * L);
   auto fill = [&] {
      for (std::size_t s = 0; s < L; ++s)
         for (std::size_t t = 0; t < L; ++t) {
            double& w = table[s * L + t];
            if (cfg.potential == PotentialKind::submodular)
               w = s == t ? draw(cfg.weight_lo, 0.0) : draw(0.0, cfg.weight_hi);
            else
               w = draw(cfg.weight_lo, cfg.weight_hi);
         }
   };
   for (std::size_t r = 0; r < cfg.rows; ++r)
      for (std::size_t c = 0; c < cfg.cols; ++c) {
         const int v = static_cast<int>(r * cfg.cols + c);
         if (c + 1 < cfg.cols) {
            fill();
            model.add_edge(v, v + 1, table);
         }
         if (r + 1 < cfg.rows) {
            fill();
            model.add_edge(v, v + static_cast<int>(cfg.cols), table);
         }
      }
   return model;
}

GeneratedInstance generate_ising(const ExperimentConfig& cfg)
{
   cfg.validate();
   GeneratedInstance inst;
   for (std::uint64_t attempt = 0;; ++attempt) {
      inst.model = draw_grid_model(cfg, attempt);
      if (cfg.rejection == RejectionMode::any) return inst;
      LpSolution lp = solve_lp(inst.model, LpOptions{.check_uniqueness = false});
      if (!lp.fractional_set.empty()) {
         inst.lp = std::move(lp);
         return inst;
      }
      if (++inst.rejections >= cfg.rejection_limit)
         throw Error(ErrorCode::rejection_limit,
                     "no fractional LP after " + std::to_string(inst.rejections) + " draws (seed " + std::to_string(cfg.seed) + ")");
   }
}

Decomposition make_decomposition(const MrfModel& model, DecompositionKind kind, std::size_t rows, std::size_t cols)
{
   if (kind == DecompositionKind::edges) return edge_decomposition(model);
   return grid_forests(model, rows, cols);
}

nlohmann::json dual_state_to_json(const Decomposition& d, const DualState<double>& state, const LpSolution* lp)
{
   nlohmann::json doc = {{"iterations", state.iteration},
                         {"stop_reason", state.stop_reason},
                         {"agreement", state.agreement},
                         {"best_dual", state.best_dual},
                         {"best_primal", state.best_primal},
                         {"best_assignment", state.best_assignment},
                         {"final_disagreements", check_agreement(d, state.minimisers).disagreement_nodes}};
   if (lp) {
      doc["lp_minus_best_dual"] = to_double(lp->optimum) - state.best_dual;
      doc["dual_converged"] = dual_converged(state, *lp);
   }
   return doc;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text)
{
   std::ofstream out(path, std::ios::binary);
   out << text;
   if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
}

void write_grid(const std::filesystem::path& dir, const std::string& stem, const CharGrid& grid)
{
   write_text(dir / (stem + ".txt"), to_ascii(grid));
   std::ofstream out(dir / (stem + ".ppm"), std::ios::binary);
   write_ppm(out, grid);
   if (!out) throw Error(ErrorCode::io_error, "cannot write " + (dir / (stem + ".ppm")).string());
}

void write_artifacts(const ExperimentConfig& cfg, const Decomposition& d, const PipelineResult& r)
{
   namespace fs = std::filesystem;
   const fs::path dir(cfg.output_dir);
   std::error_code ec;
   fs::create_directories(dir, ec);
   if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
   write_text(dir / "report.json", r.json.dump(2) + "\n");
   std::ostringstream csv;
   write_history_csv(csv, r.dual.history);
   write_text(dir / "history.csv", csv.str());

   const std::size_t n = r.instance.model.num_nodes();
   if (cfg.rows * cfg.cols != n) return;
   write_grid(dir, "mu_star", marginals_grid(cfg.rows, cfg.cols, r.lp.mu_star));
   std::string trees;
   for (std::size_t j = 0; j < d.size(); ++j) {
      PartialAssignment labels(n, -1);
      const auto& nodes = d.subgraphs()[j].nodes;
      for (std::size_t k = 0; k < nodes.size(); ++k) labels[nodes[k]] = r.dual.minimisers[j][k];
      CharGrid g = labels_grid(cfg.rows, cfg.cols, labels);
      for (std::size_t i = 0; i < n; ++i)
         if (labels[i] < 0) g.cells[i] = ' ';
      trees += "tree " + std::to_string(j) + "\n" + to_ascii(g) + "\n";
      std::ofstream out(dir / ("tree_" + std::to_string(j) + ".ppm"), std::ios::binary);
      write_ppm(out, g);
   }
   write_text(dir / "trees.txt", trees);
   write_grid(dir, "disagreement", mask_grid(cfg.rows, cfg.cols, check_agreement(d, r.dual.minimisers).disagreement_nodes));
   PartialAssignment a_map(n, -1);
   const ExactMarginals& mu = r.lp.mu_star;
   for (int i : r.report.unambiguous)
      for (std::size_t s = 0; s < mu.num_labels; ++s)
         if (mu.node(i, static_cast<Label>(s)) == 1) a_map[i] = static_cast<Label>(s);
   write_grid(dir, "unambiguous", labels_grid(cfg.rows, cfg.cols, a_map));
   write_grid(dir, "best_assignment", labels_grid(cfg.rows, cfg.cols, PartialAssignment(r.dual.best_assignment)));
}

PipelineResult run_stages(const ExperimentConfig& cfg, GeneratedInstance inst, bool generated)
{
   PipelineResult r;
   r.instance = std::move(inst);
   const MrfModel& model = r.instance.model;
   r.lp = in_stage("lp", [&] {
      auto sol = solve_lp(model, LpOptions{.check_uniqueness = false});
      sol.is_unique = check_uniqueness(model, sol);
      return sol;
   });
   const Decomposition d = in_stage("decompose", [&] { return make_decomposition(model, cfg.decomposition, cfg.rows, cfg.cols); });
   DualSolverConfig dual_cfg = cfg.dual;
   dual_cfg.workers = cfg.workers;
   r.dual = in_stage("dual", [&] { return solve_dual<double>(d, dual_cfg); });
   PersistencyOptions popts{cfg.oracle, cfg.oracle_cap, cfg.workers};
   r.report = in_stage("persistency", [&] { return analyze_persistency(model, d, r.lp, popts); });
   popts.oracle = false;
   r.subgradient = in_stage("persistency", [&] { return analyze_persistency(model, d, r.lp, r.dual, popts); });
   r.all_pass = r.report.all_pass() && r.subgradient.all_pass();

   nlohmann::json sub = report_to_json(d, r.subgradient);
   r.json = {{"config", config_to_json(cfg)},
             {"generation", generated ? nlohmann::json{{"rejections", r.instance.rejections}} : nlohmann::json(nullptr)},
             {"model", model_to_json(model)},
             {"lp", solution_to_json(r.lp)},
             {"decomposition", {{"kind", to_string(cfg.decomposition)}, {"subproblems", d.size()}}},
             {"dual", dual_state_to_json(d, r.dual, &r.lp)},
             {"persistency", report_to_json(d, r.report)},
             {"subgradient_checks",
              {{"dual_source", sub["dual_source"]},
               {"unambiguous_set", sub["unambiguous_set"]},
               {"checks", sub["checks"]}}},
             {"all_pass", r.all_pass}};
   if (!cfg.output_dir.empty()) in_stage("artifacts", [&] { write_artifacts(cfg, d, r); });
   return r;
}

} // namespace

PipelineResult run_pipeline(const ExperimentConfig& cfg)
{
   in_stage("config", [&] { cfg.validate(); });
   auto inst = in_stage("generate", [&] { return generate_ising(cfg); });
   return run_stages(cfg, std::move(inst), true);
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, const MrfModel& model)
{
   in_stage("config", [&] { cfg.dual.validate(); });
   GeneratedInstance inst;
   inst.model = model;
   return run_stages(cfg, std::move(inst), false);
}

BatchSummary run_batch(const ExperimentConfig& cfg, std::uint64_t first_seed, std::size_t count)
{
   cfg.validate();
   BatchSummary summary;
   summary.rows.resize(count);
   parallel_for(count, cfg.workers, [&](std::size_t k) {
      ExperimentConfig c = cfg;
      c.seed = first_seed + k;
      c.output_dir.clear();
      c.workers = 1;
      const auto r = run_pipeline(c);
      summary.rows[k] = {c.seed,
                         r.instance.rejections,
                         r.lp.is_unique.value_or(false),
                         r.lp.integral_set.size(),
                         r.report.unambiguous.size(),
                         to_double(r.lp.optimum) - r.dual.best_dual,
                         r.report.theorem1,
                         r.report.theorem2,
                         r.report.theorem3,
                         r.report.lemma_c1,
                         r.report.strong_persistency,
                         r.all_pass};
   });
   summary.counts.assign(batch_check_names().size(), {0, 0, 0});
   for (const auto& row : summary.rows) {
      const CheckResult checks[] = {row.theorem1, row.theorem2, row.theorem3, row.lemma_c1, row.strong_persistency};
      for (std::size_t c = 0; c < summary.counts.size(); ++c) ++summary.counts[c][static_cast<std::size_t>(checks[c])];
   }
   return summary;
}

std::string batch_table(const BatchSummary& s)
{
   std::ostringstream out;
   out << std::left << std::setw(20) << "check" << std::right << std::setw(6) << "pass" << std::setw(6) << "fail"
       << std::setw(6) << "n/a" << std::setw(9) << "rate" << '\n';
   for (std::size_t c = 0; c < s.counts.size(); ++c) {
      const auto& k = s.counts[c];
      const std::size_t applicable = k[0] + k[1];
      out << std::left << std::setw(20) << batch_check_names()[c] << std::right << std::setw(6) << k[0] << std::setw(6) << k[1]
          << std::setw(6) << k[2] << std::setw(9);
      if (applicable)
         out << (std::to_string(100 * k[0] / applicable) + "%");
      else
         out << "-";
      out << '\n';
   }
   std::size_t unique = 0, ok = 0;
   for (const auto& row : s.rows) {
      unique += row.unique;
      ok += row.all_pass;
   }
   out << "seeds " << s.rows.size() << ", unique LP " << unique << ", all checks pass " << ok << '\n';
   return out.str();
}

void write_batch_csv(std::ostream& out, const BatchSummary& s)
{
   out << "seed,rejections,unique,integral,unambiguous,dual_gap";
   for (const auto& name : batch_check_names()) out << ',' << name;
   out << ",all_pass\n" << std::setprecision(17);
   for (const auto& r : s.rows)
      out << r.seed << ',' << r.rejections << ',' << r.unique << ',' << r.integral << ',' << r.unambiguous << ',' << r.dual_gap
          << ',' << to_string(r.theorem1) << ',' << to_string(r.theorem2) << ',' << to_string(r.theorem3) << ','
          << to_string(r.lemma_c1) << ',' << to_string(r.strong_persistency) << ',' << r.all_pass << '\n';
}

nlohmann::json batch_to_json(const BatchSummary& s)
{
   nlohmann::json rows = nlohmann::json::array();
   for (const auto& r : s.rows)
      rows.push_back({{"seed", r.seed},
                      {"rejections", r.rejections},
                      {"unique", r.unique},
                      {"integral", r.integral},
                      {"unambiguous", r.unambiguous},
                      {"dual_gap", r.dual_gap},
                      {"theorem1", to_string(r.theorem1)},
                      {"theorem2", to_string(r.theorem2)},
                      {"theorem3", to_string(r.theorem3)},
                      {"lemma_c1", to_string(r.lemma_c1)},
                      {"strong_persistency", to_string(r.strong_persistency)},
                      {"all_pass", r.all_pass}});
   nlohmann::json counts = nlohmann::json::object();
   for (std::size_t c = 0; c < s.counts.size(); ++c)
      counts[batch_check_names()[c]] = {{"pass", s.counts[c][0]}, {"fail", s.counts[c][1]}, {"not_applicable", s.counts[c][2]}};
   return {{"rows", rows}, {"counts", counts}};
}

} // namespace pomap
