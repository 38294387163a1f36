#include "pomap/experiment.hpp"
#include "pomap/render.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace pomap;

namespace {

struct Common {
   std::string model_path;
   bool uai_energies = false;
   std::string decomp = "grid-forests";
   std::size_t rows = 0;
   std::size_t cols = 0;
   std::string format = "json";
   std::string output;
   std::size_t workers = 0;
   // dual solver
   std::size_t iters = 1000;
   std::string step = "diminishing";
   double step_constant = 0.1;
   double step_a = 0.0;
   double step_b = 10.0;
   double polyak_scale = 1.0;
   double gap_tol = 1e-9;
   std::size_t stagnation = 0;
   // generator
   std::size_t labels = 2;
   std::uint64_t seed = 0;
   double lo = -0.5;
   double hi = 0.5;
   std::string rejection = "require-fractional";
   std::size_t rejection_limit = 10000;
   std::string potential = "independent";
   bool oracle = false;
   std::uint64_t oracle_cap = default_state_cap;
};

void add_model(CLI::App* app, Common& c)
{
   app->add_option("model", c.model_path, "model file (.json, or .uai)")->required();
   app->add_flag("--uai-energies", c.uai_energies, "read UAI tables as energies rather than probabilities");
}

void add_grid(CLI::App* app, Common& c)
{
   app->add_option("--rows", c.rows, "grid rows");
   app->add_option("--cols", c.cols, "grid columns");
}

void add_decomp(CLI::App* app, Common& c)
{
   app->add_option("--decomp", c.decomp, "grid-forests, edges, or a subgraph JSON file");
}

void add_output(CLI::App* app, Common& c, std::vector<std::string> formats)
{
   app->add_option("--format", c.format, "output format")->check(CLI::IsMember(formats));
   app->add_option("-o,--output", c.output, "output file (default stdout)");
}

void add_workers(CLI::App* app, Common& c)
{
   app->add_option("--workers", c.workers, "worker threads (default POMAP_WORKERS or 1)");
}

void add_dual(CLI::App* app, Common& c)
{
   app->add_option("--iters", c.iters, "maximum subgradient iterations");
   app->add_option("--step", c.step, "step rule")->check(CLI::IsMember({"constant", "diminishing", "polyak"}));
   app->add_option("--step-constant", c.step_constant, "constant step size");
   app->add_option("--step-a", c.step_a, "a in a/(b+t); 0 uses the initial gap");
   app->add_option("--step-b", c.step_b, "b in a/(b+t)");
   app->add_option("--polyak-scale", c.polyak_scale, "Polyak step scale in (0, 2]");
   app->add_option("--gap-tol", c.gap_tol, "stop when best primal - best dual falls below this");
   app->add_option("--stagnation", c.stagnation, "stop after this many iterations without dual progress (0 = off)");
}

void add_generator(CLI::App* app, Common& c)
{
   app->add_option("--rows", c.rows, "grid rows")->default_str("5");
   app->add_option("--cols", c.cols, "grid columns")->default_str("5");
   app->add_option("--labels", c.labels, "labels per node");
   app->add_option("--seed", c.seed, "random seed");
   app->add_option("--lo", c.lo, "lower end of the weight interval");
   app->add_option("--hi", c.hi, "upper end of the weight interval");
   app->add_option("--rejection", c.rejection, "rejection mode")->check(CLI::IsMember({"require-fractional", "any"}));
   app->add_option("--rejection-limit", c.rejection_limit, "maximum number of rejected draws");
   app->add_option("--potential", c.potential, "pairwise tables")->check(CLI::IsMember({"independent", "submodular"}));
}

void add_oracle(CLI::App* app, Common& c)
{
   app->add_flag("--oracle", c.oracle, "enumerate all MAP optima for the strong persistency check");
   app->add_option("--oracle-cap", c.oracle_cap, "largest state count the oracle will enumerate");
}

std::size_t workers(const Common& c) { return c.workers ? c.workers : worker_count_from_env(); }

DualSolverConfig dual_config(const Common& c)
{
   DualSolverConfig cfg;
   cfg.max_iters = c.iters;
   cfg.step.kind = step_kind_from_string(c.step);
   cfg.step.constant = c.step_constant;
   cfg.step.a = c.step_a;
   cfg.step.b = c.step_b;
   cfg.step.polyak_scale = c.polyak_scale;
   cfg.gap_tolerance = c.gap_tol;
   cfg.stagnation_window = c.stagnation;
   cfg.workers = workers(c);
   cfg.validate();
   return cfg;
}

ExperimentConfig experiment_config(const Common& c)
{
   ExperimentConfig cfg;
   cfg.rows = c.rows ? c.rows : 5;
   cfg.cols = c.cols ? c.cols : 5;
   cfg.labels = c.labels;
   cfg.seed = c.seed;
   cfg.weight_lo = c.lo;
   cfg.weight_hi = c.hi;
   cfg.rejection = rejection_mode_from_string(c.rejection);
   cfg.rejection_limit = c.rejection_limit;
   cfg.potential = potential_kind_from_string(c.potential);
   cfg.decomposition = decomposition_kind_from_string(c.decomp);
   cfg.dual = dual_config(c);
   cfg.oracle = c.oracle;
   cfg.oracle_cap = c.oracle_cap;
   cfg.workers = workers(c);
   cfg.validate();
   return cfg;
}

// Explicit --rows/--cols, else a square grid when the node count is a square.
std::pair<std::size_t, std::size_t> grid_shape(const Common& c, const MrfModel& m)
{
   if (c.rows && c.cols) return {c.rows, c.cols};
   if (c.rows) return {c.rows, m.num_nodes() / c.rows};
   if (c.cols) return {m.num_nodes() / c.cols, c.cols};
   const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(m.num_nodes()))));
   if (side * side != m.num_nodes())
      throw Error(ErrorCode::not_a_grid, "pass --rows and --cols for a non-square grid");
   return {side, side};
}

Decomposition decomposition(const Common& c, const MrfModel& m)
{
   if (c.decomp == "edges") return edge_decomposition(m);
   if (c.decomp == "grid-forests" || c.decomp == "grid") {
      const auto [r, k] = grid_shape(c, m);
      return grid_forests(m, r, k);
   }
   std::ifstream in(c.decomp);
   if (!in) throw Error(ErrorCode::io_error, "cannot open decomposition file " + c.decomp);
   nlohmann::json doc;
   try {
      doc = nlohmann::json::parse(in);
   } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse_error, c.decomp + ": " + e.what());
   }
   return split_potentials(m, subgraphs_from_json(m, doc));
}

void emit(const Common& c, const std::string& data)
{
   if (c.output.empty()) {
      std::cout << data;
      std::cout.flush();
      return;
   }
   std::ofstream out(c.output, std::ios::binary);
   out << data;
   if (!out) throw Error(ErrorCode::io_error, "cannot write " + c.output);
}

std::string ppm(const CharGrid& g)
{
   std::ostringstream out;
   write_ppm(out, g);
   return out.str();
}

std::string grid_output(const Common& c, const CharGrid& g) { return c.format == "ppm" ? ppm(g) : to_ascii(g); }

int cmd_generate(const Common& c)
{
   const auto cfg = experiment_config(c);
   const auto inst = generate_ising(cfg);
   std::cerr << "rejections: " << inst.rejections << '\n';
   emit(c, model_to_json(inst.model).dump(2) + "\n");
   return 0;
}

int cmd_solve_lp(const Common& c)
{
   const MrfModel m = load_model(c.model_path, c.uai_energies);
   const LpSolution sol = solve_lp(m);
   if (c.format == "json") {
      emit(c, solution_to_json(sol).dump(2) + "\n");
   } else {
      const auto [r, k] = grid_shape(c, m);
      emit(c, grid_output(c, marginals_grid(r, k, sol.mu_star)));
   }
   return 0;
}

int cmd_solve_dd(const Common& c)
{
   const MrfModel m = load_model(c.model_path, c.uai_energies);
   const Decomposition d = decomposition(c, m);
   const auto state = solve_dual<double>(d, dual_config(c));
   if (c.format == "json") {
      emit(c, dual_state_to_json(d, state, nullptr).dump(2) + "\n");
   } else if (c.format == "csv") {
      std::ostringstream out;
      write_history_csv(out, state.history);
      emit(c, out.str());
   } else {
      const auto [r, k] = grid_shape(c, m);
      emit(c, grid_output(c, labels_grid(r, k, state.best_assignment)));
   }
   return 0;
}

int cmd_check(const Common& c, const std::string& dual_source)
{
   const MrfModel m = load_model(c.model_path, c.uai_energies);
   const Decomposition d = decomposition(c, m);
   const LpSolution sol = solve_lp(m);
   PersistencyOptions opts{c.oracle, c.oracle_cap, workers(c)};
   PersistencyReport report;
   if (dual_source == "subgradient")
      report = analyze_persistency(m, d, sol, solve_dual<double>(d, dual_config(c)), opts);
   else
      report = analyze_persistency(m, d, sol, opts);
   if (c.format == "json") {
      auto doc = report_to_json(d, report);
      doc["all_pass"] = report.all_pass();
      emit(c, doc.dump(2) + "\n");
   } else {
      const auto [r, k] = grid_shape(c, m);
      PartialAssignment a(m.num_nodes(), -1);
      for (int i : report.unambiguous)
         for (std::size_t s = 0; s < m.num_labels(); ++s)
            if (sol.mu_star.node(i, static_cast<Label>(s)) == 1) a[i] = static_cast<Label>(s);
      emit(c, grid_output(c, labels_grid(r, k, a)));
   }
   return report.all_pass() ? 0 : 1;
}

int cmd_pipeline(const Common& c, const std::string& out_dir)
{
   auto cfg = experiment_config(c);
   cfg.output_dir = out_dir;
   PipelineResult r;
   if (c.model_path.empty()) {
      r = run_pipeline(cfg);
   } else {
      const MrfModel m = load_model(c.model_path, c.uai_energies);
      if (!c.rows && !c.cols) std::tie(cfg.rows, cfg.cols) = grid_shape(c, m);
      r = run_pipeline(cfg, m);
   }
   if (c.format == "json") {
      emit(c, r.json.dump(2) + "\n");
   } else {
      std::string text = "mu*\n" + to_ascii(marginals_grid(cfg.rows, cfg.cols, r.lp.mu_star));
      PartialAssignment a(r.instance.model.num_nodes(), -1);
      for (int i : r.report.unambiguous)
         for (std::size_t s = 0; s < cfg.labels; ++s)
            if (r.lp.mu_star.node(i, static_cast<Label>(s)) == 1) a[i] = static_cast<Label>(s);
      text += "unambiguous\n" + to_ascii(labels_grid(cfg.rows, cfg.cols, a));
      text += std::string("all checks ") + (r.all_pass ? "pass" : "FAIL") + "\n";
      emit(c, text);
   }
   return r.all_pass ? 0 : 1;
}

int cmd_batch(const Common& c, std::uint64_t first_seed, std::size_t seeds)
{
   const auto cfg = experiment_config(c);
   const auto summary = run_batch(cfg, first_seed, seeds);
   if (c.format == "json") {
      emit(c, batch_to_json(summary).dump(2) + "\n");
   } else if (c.format == "csv") {
      std::ostringstream out;
      write_batch_csv(out, summary);
      emit(c, out.str());
   } else {
      emit(c, batch_table(summary));
   }
   for (const auto& row : summary.rows)
      if (!row.all_pass) return 1;
   return 0;
}

} // namespace

int main(int argc, char** argv)
{
   CLI::App app{"MAP inference in pairwise MRFs: exact LP relaxation, dual decomposition and partial optimality checks"};
   app.require_subcommand(1);
   Common c;
   std::string dual_source = "lp";
   std::string out_dir;
   std::uint64_t first_seed = 0;
   std::size_t seeds = 100;

   auto* gen = app.add_subcommand("generate", "draw a random grid model");
   add_generator(gen, c);
   add_output(gen, c, {"json"});

   auto* lp = app.add_subcommand("solve-lp", "exact LP relaxation over the local polytope");
   add_model(lp, c);
   add_grid(lp, c);
   add_output(lp, c, {"json", "ascii", "ppm"});

   auto* dd = app.add_subcommand("solve-dd", "subgradient dual decomposition");
   add_model(dd, c);
   add_grid(dd, c);
   add_decomp(dd, c);
   add_dual(dd, c);
   add_workers(dd, c);
   add_output(dd, c, {"json", "csv", "ascii", "ppm"});

   auto* check = app.add_subcommand("check", "partial optimality checks on a model");
   add_model(check, c);
   add_grid(check, c);
   add_decomp(check, c);
   add_dual(check, c);
   add_oracle(check, c);
   add_workers(check, c);
   check->add_option("--dual", dual_source, "dual used by the tree checks")->check(CLI::IsMember({"lp", "subgradient"}));
   add_output(check, c, {"json", "ascii", "ppm"});

   auto* pipe = app.add_subcommand("pipeline", "generate, solve and check one instance");
   add_generator(pipe, c);
   add_decomp(pipe, c);
   add_dual(pipe, c);
   add_oracle(pipe, c);
   add_workers(pipe, c);
   pipe->add_option("--model", c.model_path, "use this model instead of generating one");
   pipe->add_flag("--uai-energies", c.uai_energies, "read UAI tables as energies");
   pipe->add_option("--out", out_dir, "directory for the report, history and grid pictures");
   add_output(pipe, c, {"json", "ascii"});

   auto* batch = app.add_subcommand("batch", "pipeline over many seeds with a pass-rate table");
   add_generator(batch, c);
   add_decomp(batch, c);
   add_dual(batch, c);
   add_oracle(batch, c);
   add_workers(batch, c);
   batch->add_option("--first-seed", first_seed, "first seed");
   batch->add_option("--seeds", seeds, "number of seeds");
   add_output(batch, c, {"ascii", "csv", "json"});
   batch->callback([&] {
      if (c.format == "json" && batch->count("--format") == 0) c.format = "ascii";
   });

   try {
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      const int rc = app.exit(e);
      return rc == 0 ? 0 : 2;
   }
   try {
      if (gen->parsed()) return cmd_generate(c);
      if (lp->parsed()) return cmd_solve_lp(c);
      if (dd->parsed()) return cmd_solve_dd(c);
      if (check->parsed()) return cmd_check(c, dual_source);
      if (pipe->parsed()) return cmd_pipeline(c, out_dir);
      if (batch->parsed()) return cmd_batch(c, first_seed, seeds);
   } catch (const Error& e) {
      std::cerr << "error";
      if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
      std::cerr << " (" << to_string(e.code()) << "): " << e.what() << '\n';
      return 2;
   }
   return 2;
}
