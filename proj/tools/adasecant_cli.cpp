// adasecant run | grid | compare

#include "adasecant/harness.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace adasecant;

namespace {

ExperimentConfig base_config(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_config(path);
}

void write_record(const RunRecord& record, const std::string& out) {
  if (out.empty() || out == "-") {
    write_csv(record, std::cout);
  } else {
    write_csv(record, fs::path(out));
    std::ofstream snap(fs::path(out).string() + ".config");
    snap << to_text(record.config);
  }
}

void report(const RunRecord& r) {
  std::cerr << r.label() << " on " << r.config.problem.name << ": " << r.rows.size()
            << " rows, final train_loss " << format_real(r.final_loss()) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adasecant optimizer experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  std::string out;

  auto* run = app.add_subcommand("run", "Run one experiment and write its per-step CSV");
  run->add_option("--config", config_path, "key = value config file")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--steps", steps, "Override the step budget");
  run->add_option("--out", out, "CSV path ('-' for stdout)");

  std::string param;
  std::string values;
  std::vector<std::uint64_t> seeds;
  auto* grid = app.add_subcommand("grid", "Sweep one config key and report every cell");
  grid->add_option("--config", config_path, "key = value config file")->required();
  grid->add_option("--param", param, "Config key to sweep, e.g. optimizer.lr")->required();
  grid->add_option("--values", values, "a,b,c | logspace:lo:hi:n | linspace:lo:hi:n")
      ->required();
  grid->add_option("--seeds", seeds, "Seeds averaged per cell (default: config seed)")
      ->delimiter(',');
  grid->add_option("--steps", steps, "Override the step budget");
  grid->add_option("--out", out, "Directory for the table and the best cell's CSV");

  std::string optimizers;
  std::string problem;
  auto* compare = app.add_subcommand("compare", "Run several optimizers on one problem");
  compare->add_option("--optimizers", optimizers, "Comma-separated optimizer names")
      ->required();
  compare->add_option("--problem", problem, "Problem name")->required();
  compare->add_option("--out", out, "Output directory")->required();
  compare->add_option("--config", config_path, "Base config file");
  compare->add_option("--seed", seed, "Override the config seed");
  compare->add_option("--steps", steps, "Override the step budget");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = base_config(config_path);
    if (seed) cfg.seed = *seed;
    if (steps) cfg.steps = *steps;

    if (*run) {
      if (!out.empty()) cfg.out = out;
      const RunRecord record = run_experiment(cfg);
      write_record(record, cfg.out);
      report(record);
      return 0;
    }

    if (*grid) {
      const GridResult result = grid_search(cfg, {{param, parse_values(values)}}, seeds);
      write_grid_table(result, std::cout);
      if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream table(fs::path(out) / "grid.tsv");
        write_grid_table(result, table);
        if (result.best) write_record(result.best_record(), (fs::path(out) / "best.csv").string());
      }
      if (!result.best) {
        std::cerr << "error: every grid cell failed\n";
        return 2;
      }
      return 0;
    }

    // compare
    set_param(cfg, "problem", problem);
    fs::create_directories(out);
    std::vector<RunRecord> records;
    int status = 0;
    for (const auto& name : parse_values(optimizers)) {
      ExperimentConfig c = cfg;
      set_param(c, "optimizer", name);
      try {
        records.push_back(run_experiment(c));
      } catch (const RunAborted& e) {
        std::cerr << name << ": " << e.what() << '\n';
        records.push_back(e.record);
        status = 2;
      }
      write_record(records.back(), (fs::path(out) / (name + ".csv")).string());
      report(records.back());
    }
    emit_plot_data(records, fs::path(out) / "plot.dat");
    return status;
  } catch (const RunAborted& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
