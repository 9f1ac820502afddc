#include "impact_game_cli/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <string>

#include "impact_game/analytics.hpp"
#include "impact_game/errors.hpp"
#include "impact_game/experiment.hpp"
#include "impact_game/io.hpp"

namespace impact::cli {
namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> train_iters;
  std::optional<int> test_iters;
  std::optional<std::string> mode;
  std::optional<std::string> scenario;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (missing keys take defaults)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "root seed (overrides config and IMPACT_GAME_SEED)");
  cmd->add_option("--runs", o.runs, "number of independent runs")->check(CLI::PositiveNumber);
  cmd->add_option("--train-iters", o.train_iters, "training iterations per run");
  cmd->add_option("--test-iters", o.test_iters, "testing iterations per run");
  cmd->add_option("--mode", o.mode, "intra-step mode")
      ->check(CLI::IsMember({"sequential", "simultaneous"}));
  cmd->add_option("--scenario", o.scenario, "noise scenario")
      ->check(CLI::IsMember({"zero", "moderate", "large"}));
  cmd->add_flag("--paper-scale", o.paper_scale, "20 runs x 5000 training / 2500 testing iterations");
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("IMPACT_GAME_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t pos = 0;
    const std::string text(raw);
    if (text.front() == '-') throw std::invalid_argument(text);
    const auto v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("IMPACT_GAME_SEED is not an unsigned integer: '") + raw + "'");
  }
}

ExperimentConfig resolve(const CommonOptions& o) {
  const auto fallback = env_seed();
  ExperimentConfig c;
  if (o.config_path.empty()) {
    c = parse_config_text("{}", "<defaults>", fallback);
  } else {
    c = parse_config(o.config_path, fallback);
  }
  if (o.scenario && *o.scenario != c.scenario) {
    c.scenario = *o.scenario;
    c.sigma_train = c.sigma_test = scenario_sigma(c.scenario);
  }
  if (o.paper_scale) {
    const auto p = paper_scale_config();
    c.runs = p.runs;
    c.train_iters = p.train_iters;
    c.test_iters = p.test_iters;
  }
  if (o.seed) c.seed = *o.seed;
  if (o.runs) c.runs = *o.runs;
  if (o.train_iters) c.train_iters = *o.train_iters;
  if (o.test_iters) c.test_iters = *o.test_iters;
  if (o.mode) c.mode = parse_mode(*o.mode);
  c.validate();
  return c;
}

void print_pair(std::ostream& out, const char* label, const PerAgent& p) {
  out << label << ": " << format_number(p[0]) << ", " << format_number(p[1]) << '\n';
}

void print_schedule(std::ostream& out, const char* label, const Schedule& v) {
  out << label << ':';
  for (const double x : v) out << ' ' << format_number(x);
  out << '\n';
}

void print_summary(std::ostream& out, const ScenarioReport& rep, const fs::path& dir) {
  out << "scenario " << rep.label << " (" << rep.runs.size() << " runs, mode "
      << to_string(rep.config.mode) << ")\n";
  print_pair(out, "nash_is", rep.refs.nash_is);
  print_pair(out, "pareto_is", rep.refs.pareto_is);
  for (const auto& rr : rep.runs) {
    out << "run " << rr.run_id << ": centroid " << format_number(rr.centroid[0]) << ", "
        << format_number(rr.centroid[1]) << " -> " << to_string(rr.region) << '\n';
  }
  out << "regions:";
  for (std::size_t i = 0; i < kAllRegions.size(); ++i) {
    out << ' ' << to_string(kAllRegions[i]) << '=' << rep.region_counts[i];
  }
  out << "\nbundle written to " << dir.string() << '\n';
}

int cmd_analytics(const CommonOptions& o, std::ostream& out) {
  const auto c = resolve(o);
  const MarketParams p = c.test_market();
  const auto model = QuadraticCostModel::from(p, c.mode);
  const auto inputs = NashInputs::symmetric(p, 0.0);
  out << std::setprecision(12);
  out << "mode: " << to_string(c.mode) << '\n';
  out << "nash inventory q*(t) per agent:\n";
  for (int t = 0; t <= p.n_steps; ++t) {
    out << "  q*(" << t << ") = " << format_number(nash_inventory(inputs, t)[0]) << '\n';
  }
  const auto nash = nash_schedule(inputs);
  const auto twap = twap_schedule(p.q0, p.n_steps);
  print_schedule(out, "nash_schedule", nash.first);
  print_schedule(out, "twap_schedule", twap);
  print_pair(out, "nash_is", expected_is(model, nash.first, nash.second));
  print_pair(out, "pareto_is", expected_is(model, twap, twap));
  if (2.0 * p.alpha > p.kappa) {
    const auto discrete = discrete_nash_schedule(model, p.q0, p.n_steps);
    print_schedule(out, "discrete_nash_schedule", discrete.first);
    print_pair(out, "discrete_nash_is", expected_is(model, discrete.first, discrete.second));
  }
  return 0;
}

int cmd_front(const CommonOptions& o, std::ostream& out) {
  const auto c = resolve(o);
  const auto refs = compute_references(c);
  fs::create_directories(o.out_dir);
  const fs::path path = fs::path(o.out_dir) / "front.csv";
  write_front_csv(refs.front, path);
  out << "wrote " << refs.front.size() << " front points to " << path.string() << '\n';
  return 0;
}

int cmd_train(const CommonOptions& o, std::ostream& out) {
  const auto c = resolve(o);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_text_file(dir / "config.json", config_to_json(c) + "\n");
  std::string log = "run_id,iter,reward1,reward2,is1,is2\n";
  for (int r = 0; r < c.runs; ++r) {
    const auto tp = train_run(c, r);
    for (std::size_t k = 0; k < 2; ++k) {
      save_weights(tp.agents[k].q_main,
                   dir / ("run_" + std::to_string(r) + "_agent" + std::to_string(k + 1) + ".json"));
    }
    for (std::size_t i = 0; i < tp.log.episode_reward.size(); ++i) {
      log += std::to_string(r) + ',' + std::to_string(i) + ',' +
             format_number(tp.log.episode_reward[i][0]) + ',' +
             format_number(tp.log.episode_reward[i][1]) + ',' +
             format_number(tp.log.episode_is[i][0]) + ',' + format_number(tp.log.episode_is[i][1]) +
             '\n';
    }
    out << "run " << r << ": trained " << c.train_iters << " iterations, final epsilon "
        << format_number(tp.agents[0].epsilon) << '\n';
  }
  write_text_file(dir / "train_episodes.csv", log);
  out << "weights written to " << dir.string() << '\n';
  return 0;
}

int cmd_test(const CommonOptions& o, const std::string& weights_dir, std::ostream& out) {
  const auto c = resolve(o);
  const fs::path wdir = weights_dir.empty() ? fs::path(o.out_dir) : fs::path(weights_dir);
  ScenarioReport rep;
  rep.label = c.label();
  rep.config = c;
  rep.refs = compute_references(c);
  for (int r = 0; r < c.runs; ++r) {
    std::array<AgentState, 2> agents{make_agent(c.ddql, c.train_market(), 0),
                                     make_agent(c.ddql, c.train_market(), 0)};
    for (std::size_t k = 0; k < 2; ++k) {
      const auto net = load_weights(wdir / ("run_" + std::to_string(r) + "_agent" +
                                            std::to_string(k + 1) + ".json"));
      copy_weights(net, agents[k].q_main);
    }
    rep.runs.push_back(test_run(agents, c, r, rep.refs));
    for (std::size_t i = 0; i < kAllRegions.size(); ++i) {
      if (kAllRegions[i] == rep.runs.back().region) ++rep.region_counts[i];
    }
  }
  write_bundle(rep, o.out_dir);
  print_summary(out, rep, o.out_dir);
  return 0;
}

int cmd_scenario(const CommonOptions& o, std::ostream& out) {
  const auto c = resolve(o);
  const auto rep = run_scenario(c);
  write_bundle(rep, o.out_dir);
  print_summary(out, rep, o.out_dir);
  return 0;
}

int cmd_misspec(const CommonOptions& o, std::optional<double> s_train, std::optional<double> s_test,
                std::ostream& out) {
  auto c = resolve(o);
  if (s_train) c.sigma_train = *s_train;
  if (s_test) c.sigma_test = *s_test;
  if (!s_train && !s_test && !c.misspecified()) {
    c.sigma_train = 1e-9;
    c.sigma_test = 1e-2;
  }
  c.validate();
  const auto rep = run_misspecified(c);
  write_bundle(rep, o.out_dir);
  print_summary(out, rep, o.out_dir);
  return 0;
}

int cmd_report(const std::string& bundle, const std::string& out_dir, std::ostream& out) {
  const auto rep = read_bundle(bundle);
  const fs::path dir = out_dir.empty() ? fs::path(bundle) : fs::path(out_dir);
  fs::create_directories(dir);
  render_scatter(rep, dir / "scatter.svg");
  render_strategies(rep, dir / "strategies.svg");
  out << "rendered " << (dir / "scatter.svg").string() << " and "
      << (dir / "strategies.svg").string() << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-agent market impact game laboratory", "impact_game"};
  app.require_subcommand(1);

  CommonOptions analytics_o, front_o, train_o, test_o, scenario_o, misspec_o;
  auto* analytics = app.add_subcommand("analytics", "print Nash and TWAP schedules and reference IS");
  add_common(analytics, analytics_o);
  auto* front = app.add_subcommand("front", "write the weighted-sum Pareto front to <out>/front.csv");
  add_common(front, front_o);
  auto* train = app.add_subcommand("train", "train agent pairs and save weight snapshots");
  add_common(train, train_o);
  auto* test = app.add_subcommand("test", "test saved weight snapshots and write a bundle");
  add_common(test, test_o);
  std::string weights_dir;
  test->add_option("--weights", weights_dir, "directory with run_<r>_agent<k>.json (default --out)");
  auto* scenario = app.add_subcommand("scenario", "train and test all runs, write a bundle");
  add_common(scenario, scenario_o);
  auto* misspec = app.add_subcommand("misspec", "train and test under different volatilities");
  add_common(misspec, misspec_o);
  std::optional<double> s_train, s_test;
  misspec->add_option("--sigma-train", s_train, "training volatility")->check(CLI::NonNegativeNumber);
  misspec->add_option("--sigma-test", s_test, "testing volatility")->check(CLI::NonNegativeNumber);
  auto* report = app.add_subcommand("report", "render figures from a saved bundle");
  std::string bundle_dir, report_out;
  report->add_option("--bundle", bundle_dir, "bundle directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "figure directory (default: the bundle)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (analytics->parsed()) return cmd_analytics(analytics_o, out);
    if (front->parsed()) return cmd_front(front_o, out);
    if (train->parsed()) return cmd_train(train_o, out);
    if (test->parsed()) return cmd_test(test_o, weights_dir, out);
    if (scenario->parsed()) return cmd_scenario(scenario_o, out);
    if (misspec->parsed()) return cmd_misspec(misspec_o, s_train, s_test, out);
    if (report->parsed()) return cmd_report(bundle_dir, report_out, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace impact::cli
