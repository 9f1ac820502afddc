#include "impact_game/io.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "impact_game/errors.hpp"

namespace impact {
namespace {

using nlohmann::json;

class KeyReader {
 public:
  KeyReader(const json& obj, std::string source) : obj_(obj), source_(std::move(source)) {}

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, int>) {
        if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
        const auto v = it->get<long long>();
        if (v < INT32_MIN || v > INT32_MAX) throw std::invalid_argument("integer out of range");
        out = static_cast<int>(v);
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!it->is_number_unsigned()) {
          throw std::invalid_argument("expected a non-negative integer");
        }
        out = it->get<std::uint64_t>();
      } else if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw std::invalid_argument("expected a number");
        out = it->get<double>();
      } else {
        if (!it->is_string()) throw std::invalid_argument("expected a string");
        out = it->get<std::string>();
      }
    } catch (const std::exception& e) {
      fail(key, e.what());
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(source_ + ": key '" + key + "': " + what);
  }

  void reject_unknown() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(source_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& obj_;
  std::string source_;
  std::set<std::string> seen_;
};

json per_agent(const PerAgent& p) { return json::array({p[0], p[1]}); }

json params_json(const MarketParams& p) {
  return {{"s0", p.s0},       {"sigma", p.sigma}, {"kappa", p.kappa}, {"alpha", p.alpha},
          {"tau", p.tau},     {"n_steps", p.n_steps}, {"q0", p.q0}};
}

json config_json(const ExperimentConfig& c) {
  return {
      {"s0", c.market.s0},
      {"kappa", c.market.kappa},
      {"alpha", c.market.alpha},
      {"tau", c.market.tau},
      {"n_steps", c.market.n_steps},
      {"q0", c.market.q0},
      {"train_iters", c.train_iters},
      {"test_iters", c.test_iters},
      {"runs", c.runs},
      {"seed", c.seed},
      {"scenario", c.scenario},
      {"sigma_train", c.sigma_train},
      {"sigma_test", c.sigma_test},
      {"mode", std::string(to_string(c.mode))},
      {"batch_size", c.ddql.batch_size},
      {"memory_len", c.ddql.memory_len},
      {"reset_rate", c.ddql.reset_rate},
      {"decay", c.ddql.decay},
      {"gamma", c.ddql.gamma},
      {"lr", c.ddql.lr},
      {"grid_size", c.ddql.grid_size},
      {"hidden_layers", c.ddql.hidden_layers},
      {"width", c.ddql.width},
      {"leaky_slope", c.ddql.leaky_slope},
      {"epsilon0", c.ddql.epsilon0},
      {"reward_shaping", std::string(to_string(c.ddql.shaping))},
      {"epsilon_counting", std::string(to_string(c.ddql.epsilon_counting))},
      {"front_points", c.front_points},
      {"front_margin", c.front_margin},
      {"threads", c.threads},
      {"log_every", c.log_every},
  };
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::string& expected_header) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != expected_header) {
    throw IoError(path.string() + ": expected header '" + expected_header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

double to_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ": bad number '" + s + "'");
  }
}

}  // namespace

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source,
                                   std::optional<std::uint64_t> fallback_seed) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(source + ": top level must be a JSON object");

  ExperimentConfig c;
  if (fallback_seed) c.seed = *fallback_seed;
  KeyReader r(doc, source);
  r.read("s0", c.market.s0);
  r.read("kappa", c.market.kappa);
  r.read("alpha", c.market.alpha);
  r.read("tau", c.market.tau);
  r.read("n_steps", c.market.n_steps);
  r.read("q0", c.market.q0);
  r.read("train_iters", c.train_iters);
  r.read("test_iters", c.test_iters);
  r.read("runs", c.runs);
  r.read("seed", c.seed);
  r.read("scenario", c.scenario);
  if (!is_known_scenario(c.scenario)) {
    r.fail("scenario", "unknown scenario '" + c.scenario + "' (expected zero, moderate or large)");
  }
  c.sigma_train = c.sigma_test = scenario_sigma(c.scenario);
  r.read("sigma_train", c.sigma_train);
  r.read("sigma_test", c.sigma_test);
  std::string text_value = std::string(to_string(c.mode));
  r.read("mode", text_value);
  try {
    c.mode = parse_mode(text_value);
  } catch (const ConfigError& e) {
    r.fail("mode", e.what());
  }
  r.read("batch_size", c.ddql.batch_size);
  r.read("memory_len", c.ddql.memory_len);
  r.read("reset_rate", c.ddql.reset_rate);
  r.read("decay", c.ddql.decay);
  r.read("gamma", c.ddql.gamma);
  r.read("lr", c.ddql.lr);
  r.read("grid_size", c.ddql.grid_size);
  r.read("hidden_layers", c.ddql.hidden_layers);
  r.read("width", c.ddql.width);
  r.read("leaky_slope", c.ddql.leaky_slope);
  r.read("epsilon0", c.ddql.epsilon0);
  text_value = std::string(to_string(c.ddql.shaping));
  r.read("reward_shaping", text_value);
  try {
    c.ddql.shaping = parse_reward_shaping(text_value);
  } catch (const ConfigError& e) {
    r.fail("reward_shaping", e.what());
  }
  text_value = std::string(to_string(c.ddql.epsilon_counting));
  r.read("epsilon_counting", text_value);
  try {
    c.ddql.epsilon_counting = parse_epsilon_counting(text_value);
  } catch (const ConfigError& e) {
    r.fail("epsilon_counting", e.what());
  }
  r.read("front_points", c.front_points);
  r.read("front_margin", c.front_margin);
  r.read("threads", c.threads);
  r.read("log_every", c.log_every);
  r.reject_unknown();

  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path,
                              std::optional<std::uint64_t> fallback_seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string(), fallback_seed);
}

std::string config_to_json(const ExperimentConfig& config, int indent) {
  return config_json(config).dump(indent);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_front_csv(const std::vector<ParetoFrontPoint>& front,
                     const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "w,eis1,eis2\n";
  for (const auto& p : front) {
    out << format_number(p.weight) << ',' << format_number(p.eis[0]) << ','
        << format_number(p.eis[1]) << '\n';
  }
  finish(out, path);
}

Manifest write_bundle(const ScenarioReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  Manifest m;
  {
    const auto path = dir / "iterations.csv";
    auto out = open_out(path);
    out << "run_id,iter,is1,is2\n";
    std::size_t rows = 0;
    for (const auto& rr : report.runs) {
      for (std::size_t i = 0; i < rr.is_pairs.size(); ++i, ++rows) {
        out << rr.run_id << ',' << i << ',' << format_number(rr.is_pairs[i][0]) << ','
            << format_number(rr.is_pairs[i][1]) << '\n';
      }
    }
    finish(out, path);
    m.files.push_back({"iterations.csv", rows});
  }
  {
    const auto path = dir / "strategies.csv";
    auto out = open_out(path);
    out << "run_id,agent,t,avg_v\n";
    std::size_t rows = 0;
    for (const auto& rr : report.runs) {
      for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t t = 0; t < rr.avg_schedule[k].size(); ++t, ++rows) {
          out << rr.run_id << ',' << k + 1 << ',' << t + 1 << ','
              << format_number(rr.avg_schedule[k][t]) << '\n';
        }
      }
    }
    finish(out, path);
    m.files.push_back({"strategies.csv", rows});
  }
  {
    const auto path = dir / "centroids.csv";
    auto out = open_out(path);
    out << "run_id,is1,is2,region\n";
    for (const auto& rr : report.runs) {
      out << rr.run_id << ',' << format_number(rr.centroid[0]) << ','
          << format_number(rr.centroid[1]) << ',' << to_string(rr.region) << '\n';
    }
    finish(out, path);
    m.files.push_back({"centroids.csv", report.runs.size()});
  }
  write_front_csv(report.refs.front, dir / "front.csv");
  m.files.push_back({"front.csv", report.refs.front.size()});
  {
    const auto path = dir / "training_log.csv";
    auto out = open_out(path);
    out << "run_id,window,reward1,reward2\n";
    std::size_t rows = 0;
    for (const auto& rr : report.runs) {
      for (std::size_t w = 0; w < rr.train_reward_log.size(); ++w, ++rows) {
        out << rr.run_id << ',' << w << ',' << format_number(rr.train_reward_log[w][0]) << ','
            << format_number(rr.train_reward_log[w][1]) << '\n';
      }
    }
    finish(out, path);
    m.files.push_back({"training_log.csv", rows});
  }
  {
    json counts = json::object();
    for (std::size_t i = 0; i < kAllRegions.size(); ++i) {
      counts[std::string(to_string(kAllRegions[i]))] = report.region_counts[i];
    }
    const json refs = {
        {"label", report.label},
        {"nash_is", per_agent(report.refs.nash_is)},
        {"pareto_is", per_agent(report.refs.pareto_is)},
        {"nash_schedule", report.refs.nash.first},
        {"params", params_json(report.config.test_market())},
        {"mode", std::string(to_string(report.config.mode))},
        {"region_counts", counts},
        {"config", config_json(report.config)},
    };
    write_text_file(dir / "refs.json", refs.dump(2) + "\n");
    m.files.push_back({"refs.json", 0});
  }
  render_scatter(report, dir / "scatter.svg");
  m.files.push_back({"scatter.svg", 0});
  render_strategies(report, dir / "strategies.svg");
  m.files.push_back({"strategies.svg", 0});

  json files = json::array();
  for (const auto& f : m.files) files.push_back({{"file", f.file}, {"rows", f.rows}});
  const json manifest = {{"files", files}, {"config", config_json(report.config)}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  m.files.push_back({"manifest.json", 0});
  return m;
}

ScenarioReport read_bundle(const std::filesystem::path& dir) {
  ScenarioReport rep;
  const auto refs_path = dir / "refs.json";
  json refs;
  try {
    refs = json::parse(read_text_file(refs_path));
    rep.label = refs.at("label").get<std::string>();
    const auto n = refs.at("nash_is").get<std::vector<double>>();
    const auto p = refs.at("pareto_is").get<std::vector<double>>();
    if (n.size() != 2 || p.size() != 2) throw IoError(refs_path.string() + ": malformed refs");
    rep.refs.nash_is = {n[0], n[1]};
    rep.refs.pareto_is = {p[0], p[1]};
    rep.refs.nash.first = refs.at("nash_schedule").get<std::vector<double>>();
    rep.refs.nash.second = rep.refs.nash.first;
  } catch (const json::exception& e) {
    throw IoError(refs_path.string() + ": " + e.what());
  }
  rep.config = parse_config_text(refs.at("config").dump(), refs_path.string());

  const auto front_path = dir / "front.csv";
  for (const auto& row : read_csv(front_path, "w,eis1,eis2")) {
    if (row.size() != 3) throw IoError(front_path.string() + ": expected 3 columns");
    ParetoFrontPoint pt;
    pt.weight = to_double(row[0], front_path);
    pt.eis = {to_double(row[1], front_path), to_double(row[2], front_path)};
    rep.refs.front.push_back(pt);
  }

  std::map<int, RunResult> runs;
  const auto cen_path = dir / "centroids.csv";
  for (const auto& row : read_csv(cen_path, "run_id,is1,is2,region")) {
    if (row.size() != 4) throw IoError(cen_path.string() + ": expected 4 columns");
    RunResult& rr = runs[std::stoi(row[0])];
    rr.run_id = std::stoi(row[0]);
    rr.centroid = {to_double(row[1], cen_path), to_double(row[2], cen_path)};
    rr.region = parse_region(row[3]);
  }
  const auto it_path = dir / "iterations.csv";
  for (const auto& row : read_csv(it_path, "run_id,iter,is1,is2")) {
    if (row.size() != 4) throw IoError(it_path.string() + ": expected 4 columns");
    runs[std::stoi(row[0])].is_pairs.push_back({to_double(row[2], it_path), to_double(row[3], it_path)});
  }
  const auto st_path = dir / "strategies.csv";
  for (const auto& row : read_csv(st_path, "run_id,agent,t,avg_v")) {
    if (row.size() != 4) throw IoError(st_path.string() + ": expected 4 columns");
    const int agent = std::stoi(row[1]);
    if (agent != 1 && agent != 2) throw IoError(st_path.string() + ": agent must be 1 or 2");
    runs[std::stoi(row[0])].avg_schedule[static_cast<std::size_t>(agent - 1)].push_back(
        to_double(row[3], st_path));
  }
  for (auto& [id, rr] : runs) {
    for (std::size_t i = 0; i < kAllRegions.size(); ++i) {
      if (kAllRegions[i] == rr.region) ++rep.region_counts[i];
    }
    rep.runs.push_back(std::move(rr));
  }
  return rep;
}

}  // namespace impact
