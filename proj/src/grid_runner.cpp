#include "wcrl/grid_runner.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "wcrl/rng.hpp"

namespace wcrl {

namespace {

constexpr std::uint64_t kTrainStream = 0x747261696e;
constexpr std::uint64_t kEvalStream = 0x6576616c;

[[noreturn]] void fail(const ConfigEntry& e, const std::string& why) {
  throw ConfigError("line " + std::to_string(e.line) + ": " + e.key + ": " + why);
}

std::string file_stem(const std::string& label, int model) {
  std::string s = label;
  for (char& c : s) {
    if (c == '+') c = '_';
  }
  return s + "_m" + std::to_string(model);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
}

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

const char* grid_policy_name(GridPolicy p) {
  switch (p) {
    case GridPolicy::ES: return "es";
    case GridPolicy::Greedy: return "greedy";
    case GridPolicy::Random: return "random";
  }
  return "?";
}

void GridConfig::validate() const {
  if (si.empty() || mi.empty() || div_mi.empty()) {
    throw ConfigError("si, mi and div_mi input sets must all be given");
  }
  if (models_per_config < 1) throw ConfigError("models_per_config must be >= 1");
  if (eval_levels_per_model < 0) throw ConfigError("eval_levels_per_model must be >= 0");
  if (step_budget < 0) throw ConfigError("step_budget must be >= 0");
  if (greedy_depth < 1) throw ConfigError("greedy_depth must be >= 1");
  EnvConfig probe;
  probe.inputs = si;
  probe.n = n;
  probe.level_height = level_height;
  probe.level_width = level_width;
  probe.random_collapse_max_fraction = random_collapse_max_fraction;
  probe.validate();
  try {
    es.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<std::filesystem::path> load_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::filesystem::path p = line.substr(first, last - first + 1);
    out.push_back(p.is_absolute() ? p : path.parent_path() / p);
  }
  if (out.empty()) throw ConfigError(path.string() + ": manifest lists no levels");
  return out;
}

GridConfig parse_grid_config(std::string_view text, const std::filesystem::path& base_dir) {
  GridConfig cfg;
  auto manifest = [&](const ConfigEntry& e) {
    std::filesystem::path p = e.value;
    return load_manifest(p.is_absolute() ? p : base_dir / p);
  };
  for (const ConfigEntry& e : parse_key_values(text)) {
    if (e.key == "si") {
      cfg.si = parse_paths(e, base_dir);
    } else if (e.key == "mi") {
      cfg.mi = parse_paths(e, base_dir);
    } else if (e.key == "div_mi") {
      cfg.div_mi = parse_paths(e, base_dir);
    } else if (e.key == "si_manifest") {
      cfg.si = manifest(e);
    } else if (e.key == "mi_manifest") {
      cfg.mi = manifest(e);
    } else if (e.key == "div_mi_manifest") {
      cfg.div_mi = manifest(e);
    } else if (e.key == "models_per_config") {
      cfg.models_per_config = static_cast<int>(parse_int(e));
    } else if (e.key == "eval_levels_per_model") {
      cfg.eval_levels_per_model = static_cast<int>(parse_int(e));
    } else if (e.key == "level_height") {
      cfg.level_height = static_cast<int>(parse_int(e));
    } else if (e.key == "level_width") {
      cfg.level_width = static_cast<int>(parse_int(e));
    } else if (e.key == "n") {
      cfg.n = static_cast<int>(parse_int(e));
    } else if (e.key == "keep_player_patterns") {
      cfg.keep_player_patterns = parse_bool(e);
    } else if (e.key == "adjacency") {
      const auto mode = parse_adjacency_mode(e.value);
      if (!mode) fail(e, "expected observed or overlap");
      cfg.adjacency = *mode;
    } else if (e.key == "random_collapse_max_fraction") {
      cfg.random_collapse_max_fraction = parse_double(e);
    } else if (e.key == "w_gold") {
      cfg.reward.gold = parse_double(e);
    } else if (e.key == "completion_bonus") {
      cfg.reward.completion_bonus = parse_double(e);
    } else if (e.key == "contradiction_penalty") {
      cfg.reward.contradiction_penalty = parse_double(e);
    } else if (e.key == "policy") {
      if (e.value == "es") cfg.policy = GridPolicy::ES;
      else if (e.value == "greedy") cfg.policy = GridPolicy::Greedy;
      else if (e.value == "random") cfg.policy = GridPolicy::Random;
      else fail(e, "expected es, greedy or random");
    } else if (e.key == "greedy_depth") {
      cfg.greedy_depth = static_cast<int>(parse_int(e));
    } else if (e.key == "es_population") {
      cfg.es.population = static_cast<int>(parse_int(e));
    } else if (e.key == "es_sigma") {
      cfg.es.sigma = parse_double(e);
    } else if (e.key == "es_alpha") {
      cfg.es.alpha = parse_double(e);
    } else if (e.key == "es_generations") {
      cfg.es.generations = static_cast<int>(parse_int(e));
    } else if (e.key == "es_episodes_per_eval") {
      cfg.es.episodes_per_eval = static_cast<int>(parse_int(e));
    } else if (e.key == "es_k") {
      cfg.es.k = static_cast<int>(parse_int(e));
    } else if (e.key == "step_budget") {
      cfg.step_budget = parse_int(e);
    } else if (e.key == "seed") {
      cfg.seed = parse_u64(e);
    } else if (e.key == "threads") {
      cfg.threads = static_cast<int>(parse_int(e));
    } else {
      fail(e, "unknown key");
    }
  }
  cfg.validate();
  return cfg;
}

GridConfig load_grid_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_grid_config(text, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<GridCell> grid_cells() {
  static constexpr const char* kInputs[] = {"SI", "MI", "div-MI"};
  std::vector<GridCell> cells;
  for (int input = 0; input < 3; ++input) {
    for (int rr = 0; rr < 2; ++rr) {
      for (int rc = 0; rc < 2; ++rc) {
        std::string label = kInputs[input];
        if (rr) label += "+RR";
        if (rc) label += "+RC";
        cells.push_back({label, input, rr == 1, rc == 1});
      }
    }
  }
  return cells;
}

std::string GridResult::csv() const {
  std::string out = csv_header();
  for (const GridRow& r : rows) {
    out += r.failed ? csv_failed_row(r.label, r.seed) : csv_row(r.label, r.seed, r.report);
  }
  return out;
}

std::string GridResult::summary_table() const {
  std::string out = "config          models  playable  unplayable  contradiction  diversity\n";
  std::size_t i = 0;
  while (i < rows.size()) {
    const std::string& label = rows[i].label;
    int ok = 0;
    int total = 0;
    int with_div = 0;
    double play = 0, unplay = 0, contra = 0, div = 0;
    for (; i < rows.size() && rows[i].label == label; ++i) {
      ++total;
      if (rows[i].failed) continue;
      ++ok;
      play += rows[i].report.playable_rate;
      unplay += rows[i].report.unplayable_rate;
      contra += rows[i].report.contradiction_rate;
      if (rows[i].report.diversity) {
        div += *rows[i].report.diversity;
        ++with_div;
      }
    }
    char line[160];
    const std::string models = std::to_string(ok) + "/" + std::to_string(total);
    if (ok == 0) {
      std::snprintf(line, sizeof line, "%-15s %6s  %8s  %10s  %13s  %9s\n", label.c_str(),
                    models.c_str(), "FAILED", "FAILED", "FAILED", "NA");
    } else {
      const std::string d = with_div ? format_rate(div / with_div) : "NA";
      std::snprintf(line, sizeof line, "%-15s %6s  %8s  %10s  %13s  %9s\n", label.c_str(),
                    models.c_str(), format_rate(play / ok).c_str(),
                    format_rate(unplay / ok).c_str(), format_rate(contra / ok).c_str(),
                    d.c_str());
    }
    out += line;
  }
  return out;
}

namespace {

EnvConfig cell_env_config(const GridConfig& g, const GridCell& cell) {
  EnvConfig c;
  c.inputs = cell.input_set == 0 ? g.si : cell.input_set == 1 ? g.mi : g.div_mi;
  c.n = g.n;
  c.exclude_rare = cell.exclude_rare;
  c.keep_player_patterns = g.keep_player_patterns;
  c.random_collapse = cell.random_collapse;
  c.random_collapse_max_fraction = g.random_collapse_max_fraction;
  c.adjacency = g.adjacency;
  c.reward = g.reward;
  c.level_height = g.level_height;
  c.level_width = g.level_width;
  c.seed = g.seed;
  return c;
}

void run_model(const GridConfig& g, const Environment& train_env, const Environment& eval_env,
               GridRow& row) {
  std::unique_ptr<Policy> policy;
  switch (g.policy) {
    case GridPolicy::ES: {
      ESConfig es = g.es;
      es.seed = derive_seed(row.seed, kTrainStream);
      TrainingResult trained = es_train(train_env, es);
      row.training_curve = std::move(trained.curve);
      policy = std::make_unique<LinearPolicy>(std::move(trained.params));
      break;
    }
    case GridPolicy::Greedy:
      policy = std::make_unique<GreedyLookaheadPolicy>(g.greedy_depth);
      break;
    case GridPolicy::Random:
      policy = std::make_unique<FrequencyRandomPolicy>();
      break;
  }
  std::vector<EpisodeRecord> records;
  records.reserve(static_cast<std::size_t>(g.eval_levels_per_model));
  Environment env = eval_env;
  for (int e = 0; e < g.eval_levels_per_model; ++e) {
    EpisodeResult r =
        episode_rollout(*policy, env, derive_seed(row.seed, kEvalStream, static_cast<std::uint64_t>(e)));
    records.push_back({r.outcome, std::move(r.level), std::move(r.trace)});
  }
  row.report = batch_evaluate(records, g.n);
}

}  // namespace

GridResult run_grid(const GridConfig& config, const std::filesystem::path& out_dir,
                    const std::function<void(const GridRow&)>& on_row) {
  config.validate();
  const std::vector<GridCell> cells = grid_cells();
  const auto models = static_cast<std::size_t>(config.models_per_config);

  GridResult result;
  result.rows.resize(cells.size() * models);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t m = 0; m < models; ++m) {
      GridRow& row = result.rows[c * models + m];
      row.label = cells[c].label;
      row.model = static_cast<int>(m);
      row.seed = derive_seed(config.seed, c, m);
    }
  }

  parallel_for(cells.size(), config.threads, [&](std::size_t c) {
    const GridCell& cell = cells[c];
    StepBudget budget;
    if (config.step_budget > 0) {
      budget = std::make_shared<std::atomic<std::int64_t>>(config.step_budget);
    }
    std::optional<Environment> train_env;
    std::optional<Environment> eval_env;
    std::string setup_failure;
    try {
      EnvConfig ec = cell_env_config(config, cell);
      train_env.emplace(ec);
      ec.random_collapse = false;
      eval_env.emplace(ec, train_env->model_ptr());
      train_env->set_step_budget(budget);
      eval_env->set_step_budget(budget);
    } catch (const std::exception& e) {
      setup_failure = e.what();
    }
    for (std::size_t m = 0; m < models; ++m) {
      GridRow& row = result.rows[c * models + m];
      if (!setup_failure.empty()) {
        row.failed = true;
        row.failure = setup_failure;
        continue;
      }
      try {
        run_model(config, *train_env, *eval_env, row);
      } catch (const std::exception& e) {
        row.failed = true;
        row.failure = e.what();
        row.training_curve.clear();
      }
    }
  });

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir / "reports");
    std::filesystem::create_directories(out_dir / "curves");
    std::filesystem::create_directories(out_dir / "training");
    write_text(out_dir / "results.csv", result.csv());
    write_text(out_dir / "summary.txt", result.summary_table());
    for (const GridRow& row : result.rows) {
      const std::string stem = file_stem(row.label, row.model);
      nlohmann::ordered_json j;
      j["config_id"] = row.label;
      j["model"] = row.model;
      j["seed"] = row.seed;
      j["policy"] = grid_policy_name(config.policy);
      if (row.failed) {
        j["failed"] = true;
        j["failure"] = row.failure;
      } else {
        j["failed"] = false;
        j["report"] = to_json(row.report);
        write_text(out_dir / "curves" / (stem + ".jsonl"), curves_to_jsonl(row.report));
      }
      write_text(out_dir / "reports" / (stem + ".json"), j.dump(2) + "\n");
      if (!row.training_curve.empty()) {
        std::string lines;
        for (const GenerationStats& s : row.training_curve) {
          nlohmann::ordered_json t;
          t["generation"] = s.generation;
          t["mean_return"] = s.mean_return;
          t["max_return"] = s.max_return;
          lines += t.dump() + "\n";
        }
        write_text(out_dir / "training" / (stem + ".jsonl"), lines);
      }
    }
  }
  if (on_row) {
    for (const GridRow& row : result.rows) on_row(row);
  }
  return result;
}

}  // namespace wcrl
