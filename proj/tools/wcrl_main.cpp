// wcrl: command-line front end for pattern extraction, level generation,
// policy training, evaluation, the ablation grid and the episode server.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wcrl/bridge.hpp"
#include "wcrl/config.hpp"
#include "wcrl/env.hpp"
#include "wcrl/grid_runner.hpp"
#include "wcrl/metrics.hpp"
#include "wcrl/patterns.hpp"
#include "wcrl/playability.hpp"
#include "wcrl/policies.hpp"
#include "wcrl/rng.hpp"
#include "wcrl/tile_grid.hpp"

namespace fs = std::filesystem;
using namespace wcrl;

namespace {

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
}

std::string episode_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

// Flags shared by the commands that build an environment.
struct EnvFlags {
  std::string config;
  std::vector<std::string> inputs;
  std::optional<std::uint64_t> seed;
  bool exclude_rare = false;
  bool random_collapse = false;
  std::string adjacency;
  std::optional<int> height;
  std::optional<int> width;

  void add(CLI::App* cmd, bool positional_inputs = false) {
    cmd->add_option("--config", config, "environment config file");
    if (positional_inputs) {
      cmd->add_option("inputs", inputs, "input level files");
    } else {
      cmd->add_option("--inputs", inputs, "input level files (override the config)");
    }
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_flag("--exclude-rare", exclude_rare, "drop patterns seen once");
    cmd->add_flag("--random-collapse", random_collapse, "start from a partially collapsed wave");
    cmd->add_option("--adjacency", adjacency, "observed|overlap")
        ->check(CLI::IsMember({"observed", "overlap"}));
    cmd->add_option("--height", height, "level height in tiles");
    cmd->add_option("--width", width, "level width in tiles");
  }

  EnvConfig resolve() const {
    EnvConfig c;
    if (!config.empty()) c = load_env_config(config);
    if (!inputs.empty()) c.inputs.assign(inputs.begin(), inputs.end());
    if (seed) c.seed = *seed;
    if (exclude_rare) c.exclude_rare = true;
    if (random_collapse) c.random_collapse = true;
    if (!adjacency.empty()) c.adjacency = *parse_adjacency_mode(adjacency);
    if (height) c.level_height = *height;
    if (width) c.level_width = *width;
    if (c.inputs.empty()) throw ConfigError("no input levels: give --config or inputs");
    c.validate();
    return c;
  }
};

std::unique_ptr<Policy> make_policy(const std::string& name, int greedy_depth) {
  if (name == "random") return std::make_unique<FrequencyRandomPolicy>();
  if (name == "uniform") return std::make_unique<UniformRandomPolicy>();
  if (name == "greedy") return std::make_unique<GreedyLookaheadPolicy>(greedy_depth);
  if (name.rfind("es:", 0) == 0) {
    return std::make_unique<LinearPolicy>(LinearPolicyParams::load(name.substr(3)));
  }
  if (name == "remote") return std::make_unique<RemotePolicy>(std::cin, std::cout);
  throw CLI::ValidationError("--policy", "expected random|uniform|greedy|es:PATH|remote");
}

int cmd_extract(const EnvFlags& flags, const std::string& out) {
  const EnvConfig c = flags.resolve();
  std::vector<TileGrid> inputs;
  for (const auto& p : c.inputs) inputs.push_back(load_level(p));
  const auto model = build_model(c, inputs);
  std::cout << "patterns " << model->pattern_count() << "\n";
  std::cout << "rules " << model->rules().rule_count() << "\n";
  std::cout << "player_patterns " << get_player_patterns(model->patterns()).size() << "\n";
  if (!out.empty()) write_text(out, pattern_dump(model->patterns(), model->rules()).dump(2) + "\n");
  return 0;
}

int cmd_generate(const EnvFlags& flags, const std::string& policy_name, int count,
                 int greedy_depth, const std::string& out) {
  const EnvConfig c = flags.resolve();
  if (count < 0) throw CLI::ValidationError("--count", "must be >= 0");
  if (count == 0) return 0;
  if (out.empty()) throw CLI::ValidationError("--out", "required when --count > 0");
  Environment env(c);
  auto policy = make_policy(policy_name, greedy_depth);
  std::ostream& log = policy_name == "remote" ? std::cerr : std::cout;

  const fs::path dir(out);
  fs::create_directories(dir / "levels");
  fs::create_directories(dir / "traces");
  std::string index;
  std::vector<EpisodeRecord> records;
  for (int e = 0; e < count; ++e) {
    const std::uint64_t seed = derive_seed(c.seed, static_cast<std::uint64_t>(e));
    const std::string name = episode_name(static_cast<std::size_t>(e));
    nlohmann::ordered_json row;
    row["episode"] = e;
    row["seed"] = seed;
    try {
      EpisodeResult r = episode_rollout(*policy, env, seed);
      row["outcome"] = outcome_name(r.outcome);
      if (r.level) {
        write_text(dir / "levels" / (name + ".txt"), render_text(*r.level));
        row["level"] = "levels/" + name + ".txt";
      } else {
        row["cause"] = "contradiction";
      }
      write_text(dir / "traces" / (name + ".jsonl"), trace_to_jsonl(r.trace));
      row["trace"] = "traces/" + name + ".jsonl";
      records.push_back({r.outcome, std::move(r.level), std::move(r.trace)});
    } catch (const RemoteClosed& ex) {
      row["outcome"] = "failed";
      row["cause"] = ex.what();
      index += row.dump() + "\n";
      break;
    } catch (const EnvError& ex) {
      row["outcome"] = "failed";
      row["cause"] = ex.what();
    }
    index += row.dump() + "\n";
  }
  write_text(dir / "episodes.jsonl", index);
  const BatchReport report = batch_evaluate(records, c.n);
  write_text(dir / "report.json", to_json(report).dump(2) + "\n");
  log << "episodes " << report.episodes << " playable " << report.playable_rate
      << " unplayable " << report.unplayable_rate << " contradiction "
      << report.contradiction_rate << "\n";
  return 0;
}

std::vector<EpisodeRecord> read_generated(const fs::path& dir) {
  std::vector<EpisodeRecord> records;
  std::ifstream in(dir / "episodes.jsonl");
  if (!in) throw std::runtime_error((dir / "episodes.jsonl").string() + ": cannot open");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const std::string outcome = j.at("outcome").get<std::string>();
    if (outcome == "failed") continue;
    EpisodeRecord r;
    r.outcome = outcome == "playable"     ? Outcome::Playable
                : outcome == "unplayable" ? Outcome::Unplayable
                                          : Outcome::Contradiction;
    if (j.contains("level")) r.level = load_level(dir / j["level"].get<std::string>());
    r.trace = trace_from_jsonl(read_file(dir / j.at("trace").get<std::string>()));
    records.push_back(std::move(r));
  }
  return records;
}

void print_playability(const fs::path& level) {
  nlohmann::ordered_json j;
  j["level"] = level.string();
  j["report"] = to_json(analyze(load_level(level)));
  std::cout << j.dump() << "\n";
}

// Directories get a batch report, or with playability_only one line per
// level under levels/.
int cmd_evaluate(const std::vector<std::string>& paths, int n, bool playability_only) {
  for (const auto& p : paths) {
    if (!fs::is_directory(p)) {
      print_playability(p);
    } else if (playability_only) {
      std::vector<fs::path> levels;
      for (const auto& e : fs::directory_iterator(fs::path(p) / "levels")) levels.push_back(e.path());
      std::sort(levels.begin(), levels.end());
      for (const auto& l : levels) print_playability(l);
    } else {
      const auto records = read_generated(p);
      std::cout << to_json(batch_evaluate(records, n)).dump(2) << "\n";
    }
  }
  return 0;
}

int cmd_train(const EnvFlags& flags, ESConfig es, const std::string& out) {
  const EnvConfig c = flags.resolve();
  es.seed = c.seed;
  es.validate();
  if (out.empty()) throw CLI::ValidationError("--out", "required");
  Environment env(c);
  const fs::path dir(out);
  fs::create_directories(dir);
  std::string curve;
  const TrainingResult r = es_train(env, es, [&](const GenerationStats& s) {
    nlohmann::ordered_json j;
    j["generation"] = s.generation;
    j["mean_return"] = s.mean_return;
    j["max_return"] = s.max_return;
    curve += j.dump() + "\n";
    std::cout << "generation " << s.generation << " mean " << s.mean_return << " max "
              << s.max_return << "\n";
  });
  write_text(dir / "curve.jsonl", curve);
  r.params.save(dir / "params.json");
  r.best.save(dir / "best.json");
  return 0;
}

int cmd_run_grid(const std::string& config, std::optional<std::uint64_t> seed,
                 std::optional<int> threads, const std::string& out) {
  GridConfig g = load_grid_config(config);
  if (seed) g.seed = *seed;
  if (threads) g.threads = *threads;
  const GridResult r = run_grid(g, out);
  std::cout << r.summary_table();
  for (const GridRow& row : r.rows) {
    if (row.failed) std::cout << "FAILED " << row.label << " m" << row.model << ": " << row.failure << "\n";
  }
  return 0;
}

int cmd_serve(const EnvFlags& flags, std::optional<int> tcp, int max_sessions) {
  const EnvConfig c = flags.resolve();
  Environment env(c);
  if (!tcp) {
    serve_stream(env, std::cin, std::cout);
    return 0;
  }
  serve_tcp(env, *tcp, max_sessions, [](int port) {
    std::cerr << "listening 127.0.0.1:" << port << "\n";
  });
  return 0;
}

int cmd_rank(const std::string& anchor, const std::vector<std::string>& candidates, int n,
             int companions, const std::string& manifests) {
  const TileGrid a = load_level(anchor);
  struct Ranked {
    double score;
    std::string path;
  };
  std::vector<Ranked> ranked;
  for (const auto& p : candidates) {
    if (fs::equivalent(p, anchor)) continue;
    const TileGrid b = load_level(p);
    ranked.push_back({0.5 * (tp_kldiv(a, b, n) + tp_kldiv(b, a, n)), p});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& x, const Ranked& y) { return x.score < y.score; });
  for (const auto& r : ranked) std::printf("%.6f\t%s\n", r.score, r.path.c_str());
  if (manifests.empty()) return 0;
  if (companions < 1 || static_cast<std::size_t>(companions) > ranked.size()) {
    throw CLI::ValidationError("--companions", "must be between 1 and the candidate count");
  }
  const fs::path dir(manifests);
  fs::create_directories(dir);
  auto rel = [&](const std::string& p) {
    return fs::relative(fs::absolute(p), fs::absolute(dir)).generic_string();
  };
  std::string si = rel(anchor) + "\n";
  std::string mi = si;
  std::string div = si;
  for (int i = 0; i < companions; ++i) {
    mi += rel(ranked[static_cast<std::size_t>(i)].path) + "\n";
    div += rel(ranked[ranked.size() - 1 - static_cast<std::size_t>(i)].path) + "\n";
  }
  write_text(dir / "si.txt", si);
  write_text(dir / "mi.txt", mi);
  write_text(dir / "div_mi.txt", div);
  return 0;
}

int cmd_render(const std::string& level, const std::string& format, int scale,
               const std::string& out) {
  const TileGrid g = load_level(level);
  if (format == "text") {
    if (out.empty()) {
      std::cout << render_text(g);
    } else {
      write_text(out, render_text(g));
    }
    return 0;
  }
  if (out.empty()) throw CLI::ValidationError("--out", "required for png output");
  ensure_parent(out);
  write_png(out, render_level(g, RenderFormat::Image, scale), g.width() * scale,
            g.height() * scale);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wcrl: WFC constraint learning with reward-driven tile selection"};
  app.require_subcommand(1);

  EnvFlags extract_flags;
  std::string extract_out;
  auto* extract = app.add_subcommand("extract", "print pattern and rule counts; dump them as JSON");
  extract_flags.add(extract, true);
  extract->add_option("--out", extract_out, "JSON dump path");

  EnvFlags gen_flags;
  std::string gen_policy = "random";
  int gen_count = 1;
  int gen_depth = 1;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "roll out episodes and write levels and traces");
  gen_flags.add(generate);
  generate->add_option("--policy", gen_policy, "random|uniform|greedy|es:PATH|remote");
  generate->add_option("--count", gen_count, "number of episodes");
  generate->add_option("--greedy-depth", gen_depth, "lookahead depth for greedy");
  generate->add_option("--out", gen_out, "output directory");

  std::vector<std::string> eval_paths;
  int eval_n = 3;
  bool eval_playability = false;
  auto* evaluate = app.add_subcommand(
      "evaluate", "playability report per level file; batch report per generate directory");
  evaluate->add_option("paths", eval_paths, "level files or generate output directories")
      ->required();
  evaluate->add_option("--n", eval_n, "window size for diversity");
  evaluate->add_flag("--playability", eval_playability,
                     "one playability report per level, also for generate directories");

  EnvFlags train_flags;
  ESConfig es;
  std::string train_out;
  auto* train = app.add_subcommand("train", "train the linear policy with evolution strategies");
  train_flags.add(train);
  train->add_option("--population", es.population);
  train->add_option("--sigma", es.sigma);
  train->add_option("--alpha", es.alpha);
  train->add_option("--generations", es.generations);
  train->add_option("--episodes", es.episodes_per_eval, "episodes per evaluation");
  train->add_option("--k", es.k, "feature patch radius");
  train->add_option("--threads", es.threads, "0 = all cores");
  train->add_option("--out", train_out, "output directory");

  std::string grid_config;
  std::optional<std::uint64_t> grid_seed;
  std::optional<int> grid_threads;
  std::string grid_out;
  auto* grid = app.add_subcommand("run-grid", "train and evaluate the 12-configuration grid");
  grid->add_option("--config", grid_config, "grid config file")->required();
  grid->add_option("--seed", grid_seed, "master seed");
  grid->add_option("--threads", grid_threads, "concurrent cells");
  grid->add_option("--out", grid_out, "output directory")->required();

  EnvFlags serve_flags;
  std::optional<int> serve_tcp_port;
  int serve_sessions = -1;
  auto* serve = app.add_subcommand("serve", "episode server over stdio or TCP");
  serve_flags.add(serve);
  serve->add_option("--tcp", serve_tcp_port, "listen on 127.0.0.1:PORT instead of stdio");
  serve->add_option("--max-sessions", serve_sessions, "exit after this many connections");

  std::string rank_anchor;
  std::vector<std::string> rank_candidates;
  int rank_n = 3;
  int rank_companions = 1;
  std::string rank_manifests;
  auto* rank = app.add_subcommand("rank-companions",
                                  "rank candidate levels by symmetric TP-KLDiv to an anchor");
  rank->add_option("--anchor", rank_anchor, "anchor level")->required();
  rank->add_option("candidates", rank_candidates, "candidate levels")->required();
  rank->add_option("--n", rank_n);
  rank->add_option("--companions", rank_companions, "companions per manifest");
  rank->add_option("--write-manifests", rank_manifests,
                   "write si.txt, mi.txt (closest) and div_mi.txt (farthest) here");

  std::string render_in;
  std::string render_format = "text";
  int render_scale = 8;
  std::string render_out;
  auto* render = app.add_subcommand("render", "render a level as text or PNG");
  render->add_option("level", render_in)->required();
  render->add_option("--format", render_format)->check(CLI::IsMember({"text", "png"}));
  render->add_option("--scale", render_scale, "pixels per tile")->check(CLI::PositiveNumber);
  render->add_option("--out", render_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) return cmd_extract(extract_flags, extract_out);
    if (*generate) return cmd_generate(gen_flags, gen_policy, gen_count, gen_depth, gen_out);
    if (*evaluate) return cmd_evaluate(eval_paths, eval_n, eval_playability);
    if (*train) return cmd_train(train_flags, es, train_out);
    if (*grid) return cmd_run_grid(grid_config, grid_seed, grid_threads, grid_out);
    if (*serve) return cmd_serve(serve_flags, serve_tcp_port, serve_sessions);
    if (*rank) return cmd_rank(rank_anchor, rank_candidates, rank_n, rank_companions, rank_manifests);
    if (*render) return cmd_render(render_in, render_format, render_scale, render_out);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
