#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <smmslab/cli.hpp>
#include <smmslab/criteria.hpp>

namespace {

smmslab::json load_config(const std::string& path, std::string& err) {
  std::ifstream in(path);
  if (!in) {
    err = "config file not readable: " + path;
    return {};
  }
  smmslab::json j = smmslab::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    err = "config file is not valid JSON: " + path;
    return {};
  }
  return j;
}

int report_config_error(const std::string& message) {
  smmslab::json e = {{"error", "invalid_config"}, {"message", message}};
  std::cout << e.dump(2) << std::endl;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for weighted conformal boundary problems"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  long long seed = -1;
  double dt = -1.0, t_end = -1.0;
  int sample_every = -1, normalized = -1;

  struct SubSpec {
    const char* name;
    const char* desc;
    bool config_required;
  };
  const SubSpec specs[] = {
      {"curvature", "cache the weighted curvatures of a background, optionally deformed",
       true},
      {"eigen", "first eigenvalue of the conformal or companion boundary pencil", true},
      {"flow", "normalized or unnormalized conformal curvature flow", true},
      {"solve", "certified monotone search for a smaller constant-curvature factor", true},
      {"gns", "trace quotient of the truncated sharp-constant extremal", true},
      {"minimize", "preconditioned descent on the boundary quotient", true},
      {"soliton", "gradient-soliton residuals on the half-space sections", false},
      {"criteria", "run the acceptance suite and write its report", false},
  };
  std::map<std::string, CLI::App*> subs;
  for (const SubSpec& s : specs) {
    CLI::App* sub = app.add_subcommand(s.name, s.desc);
    auto* copt = sub->add_option("--config", config_path, "JSON config file");
    if (s.config_required) copt->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "seed for randomized pieces (overrides the config)")
        ->check(CLI::NonNegativeNumber);
    subs[s.name] = sub;
  }
  subs["flow"]->add_option("--dt", dt, "time step (overrides the config)");
  subs["flow"]->add_option("--t-end", t_end, "final time (overrides the config)");
  subs["flow"]->add_option("--sample-every", sample_every, "trace sampling stride");
  subs["flow"]->add_flag("--normalized{1},--unnormalized{0}", normalized,
                         "volume-preserving or raw flow");

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  smmslab::json cfg = smmslab::json::object();
  std::string base_dir = ".";
  if (!config_path.empty()) {
    std::string err;
    cfg = load_config(config_path, err);
    if (!err.empty()) return report_config_error(err);
    const auto parent = std::filesystem::path(config_path).parent_path();
    if (!parent.empty()) base_dir = parent.string();
  }
  if (cfg.is_object() && cfg.contains("command") && cfg["command"] != cmd)
    return report_config_error("config is for command '" +
                               cfg["command"].dump() + "' but the '" + cmd +
                               "' subcommand was invoked");
  if (cfg.is_object()) {
    cfg["command"] = cmd;
    if (!out_dir.empty()) cfg["out"] = out_dir;
    if (seed >= 0) cfg["seed"] = seed;
    if (cmd == "flow") {
      if (dt > 0.0) cfg["dt"] = dt;
      if (t_end > 0.0) cfg["t_end"] = t_end;
      if (sample_every >= 1) cfg["sample_every"] = sample_every;
      if (normalized >= 0) cfg["normalized"] = normalized == 1;
    }
  }

  smmslab::RunResult rr;
  if (cmd == "criteria") {
    std::string self;
    try {
      self = std::filesystem::canonical(argv[0]).string();
    } catch (...) {
      self.clear();  // launched through PATH; skip the self-spawn check
    }
    rr = smmslab::run_criteria_command(cfg, std::cout, self);
  } else {
    rr = smmslab::run_experiment(cfg, base_dir);
  }

  if (!rr.error.is_null() && !rr.error.empty()) {
    std::cout << rr.error.dump(2) << std::endl;
  } else if (cmd != "criteria") {
    smmslab::json ok = {{"out", cfg.value("out", "out")}, {"outputs", rr.outputs}};
    std::cout << ok.dump(2) << std::endl;
  }
  return rr.exit_code;
}
