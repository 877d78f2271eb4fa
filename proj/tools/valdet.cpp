// valdet <stage> --config <file> [--force] [--seed N]

#include <iostream>

#include <CLI11.hpp>

#include "valdet/error.hpp"
#include "valdet/pipeline.hpp"

namespace pl = valdet::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Value-expressive post detection pipeline"};
  std::string stage;
  std::string config_path;
  std::string run_dir;
  bool force = false;
  std::optional<std::uint64_t> seed;

  app.add_option("stage", stage, "Stage to run")->required()->check(CLI::IsMember(pl::stage_names()));
  app.add_option("--config,-c", config_path, "Pipeline config (INI)")->required();
  app.add_flag("--force,-f", force, "Rerun even when inputs are unchanged");
  app.add_option("--seed", seed, "Override run.seed");
  app.add_option("--run-dir", run_dir, "Use this run directory instead of <root>/<timestamp>-<hash>");
  app.footer("Stages: ingest clean spam-rules artm-grid spam-train spam-apply llm-annotate import-crowd\n"
             "        merge-labels alpha-report confusion-report al-select sample-users assemble train\n"
             "        evaluate predict report");
  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = pl::Config::load(config_path);
    pl::RunOptions opts;
    opts.force = force;
    opts.seed = seed;
    if (!run_dir.empty()) opts.run_dir = run_dir;
    const auto res = pl::run_stage(stage, cfg, opts);
    std::cout << res.summary.dump(2) << "\n";
    std::cerr << stage << (res.skipped ? ": up to date" : ": done") << " (" << res.run_dir.string() << ")\n";
  } catch (const valdet::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
