#include "pulsecal/harness/commands.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <json.hpp>
#include <ostream>

#include "pulsecal/error.hpp"
#include "pulsecal/harness/csv_io.hpp"
#include "pulsecal/harness/experiments.hpp"
#include "pulsecal/harness/manifest.hpp"
#include "pulsecal/rng.hpp"
#include "pulsecal/simgen.hpp"

namespace pulsecal::harness {
namespace {

namespace fs = std::filesystem;

std::string coverage_csv(const std::vector<CoverageLine>& lines) {
  std::string text = "group,n,coverage,mean_width,method,alpha\n";
  for (const auto& l : lines) {
    text += fmt::format("{},{},{},{},{},{}\n", l.group, l.n, l.coverage, l.mean_width, l.method,
                        l.alpha);
  }
  return text;
}

Dataset load_data(const RunConfig& config) {
  require(!config.data_dir.empty(), "data_dir is required (config key or --data)");
  return read_dataset(config.data_dir);
}

void cmd_simulate(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto seed = config.require_seed();
  simgen::PopulationSpec spec;
  spec.stable_count = config.stable_agents;
  spec.volatile_count = config.volatile_agents;
  spec.length = config.length;
  spec.platforms = config.platforms;
  spec.reversion_rate = config.generator_reversion_rate;
  spec.stable_innovation_std = config.stable_innovation;
  spec.volatile_innovation_std = config.volatile_innovation;
  spec.stable_divergence = config.stable_divergence;
  spec.volatile_divergence = config.volatile_divergence;
  spec.mean_low = config.mean_low;
  spec.mean_high = config.mean_high;
  spec.tail_df = config.tail_df;
  spec.threshold = config.mondrian_threshold;
  spec.released_agents = config.shift_agents;
  spec.release = {config.shift_time, config.shift_jump, config.shift_multiplier};
  spec.seed = seed;
  const auto population = simgen::gen_population(spec);
  auto factors = simgen::gen_factor_matrix(spec.agent_count(), derive_seed(seed, 0, 0xFA),
                                           config.factor_missing_rate);
  write_dataset(out, dataset_from_population(population, std::move(factors)));
  log << fmt::format("simulated {} agents x {} hours\n", spec.agent_count(), spec.length);
}

void cmd_calibrate(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto data = load_data(config);
  const auto study = run_calibration_study(data, config);
  write_text(out / "coverage_by_horizon.csv", coverage_csv(study.by_horizon));
  write_text(out / "calibration_curve.csv", coverage_csv(study.curve));
  write_text(out / "coverage_by_agent.csv", coverage_csv(study.by_agent));
  write_text(out / "coverage_by_stratum.csv", coverage_csv(study.by_stratum));
  write_text(out / "coverage_by_stratum_horizon.csv", coverage_csv(study.by_stratum_horizon));
  std::string fallback = "horizon,stable_fallback,volatile_fallback\n";
  for (const auto& line : study.fallbacks) {
    fallback += line + "\n";
  }
  write_text(out / "mondrian_fallback.csv", fallback);
  for (const auto& l : study.by_horizon) {
    log << fmt::format("h={:>3} {:<24} coverage {:.3f} width {:.4f}\n", l.group, l.method,
                       l.coverage, l.mean_width);
  }
}

void cmd_shift_study(const RunConfig& config, const fs::path& out, std::ostream& log) {
  auto data = load_data(config);
  std::vector<std::pair<const ScoreSeries*, std::size_t>> runs;
  std::vector<ScoreSeries> injected;
  if (!data.events.empty()) {
    for (const auto& e : data.events) {
      const auto it = std::find_if(data.series.begin(), data.series.end(),
                                   [&](const ScoreSeries& s) { return s.agent_id == e.agent_id; });
      if (it == data.series.end()) {
        throw IoError(fmt::format("event for unknown agent '{}'", e.agent_id));
      }
      runs.emplace_back(&*it, e.event_index);
    }
  } else {
    require(config.shift_time > 0,
            "no events.csv in the data directory and no shift_time to inject");
    const std::size_t count =
        config.shift_agents == 0 ? data.series.size() : std::min(config.shift_agents, data.series.size());
    const simgen::ShiftEvent event{config.shift_time, config.shift_jump, config.shift_multiplier};
    injected.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      injected.push_back(simgen::inject_shift(data.series[i], event));
    }
    for (const auto& s : injected) {
      runs.emplace_back(&s, config.shift_time);
    }
  }

  ShiftStudyOptions options;
  options.horizon = config.shift_horizon;
  options.alpha = config.alpha;
  options.gamma = config.gamma;
  options.pre_window = config.pre_window;
  options.final_window = config.final_window;
  options.train_fraction = config.train_fraction;
  options.reversion_rate = config.reversion_rate;

  std::string trajectory =
      "agent_id,offset,hour,actual,working_alpha,aci_lower,aci_upper,aci_width,aci_covered,"
      "split_lower,split_upper,split_width,split_covered,parametric_lower,parametric_upper,"
      "parametric_width,parametric_covered\n";
  std::string summary_csv =
      "agent_id,event_index,pre_mean_width,post6_mean_width,width_ratio,split_half_width,"
      "split_pre_mean_width,split_post6_mean_width,post_steps,aci_miscoverage,"
      "split_miscoverage,parametric_miscoverage,final_alpha_mean,telescoping_error\n";
  std::vector<ShiftSummary> summaries;
  for (const auto& [series, event] : runs) {
    const auto study = run_shift_study(*series, event, options);
    for (const auto& st : study.steps) {
      trajectory += fmt::format(
          "{},{},{},{},{},{},{},{},{:d},{},{},{},{:d},{},{},{},{:d}\n", series->agent_id, st.offset,
          st.hour, st.actual, st.working_alpha, st.aci.lower, st.aci.upper, st.aci.width(),
          st.aci.contains(st.actual), st.split.lower, st.split.upper, st.split.width(),
          st.split.contains(st.actual), st.parametric.lower, st.parametric.upper,
          st.parametric.width(), st.parametric.contains(st.actual));
    }
    const auto& s = study.summary;
    summary_csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", s.agent_id,
                               s.event_index, s.pre_mean_width, s.post6_mean_width, s.width_ratio,
                               s.split_half_width, s.split_pre_mean_width,
                               s.split_post6_mean_width, s.post_steps, s.post_miscoverage,
                               s.split_post_miscoverage, s.parametric_post_miscoverage,
                               s.final_alpha_mean, s.telescoping_error);
    summaries.push_back(s);
  }
  const auto panel = summarize_panel(summaries, config.alpha);
  std::string panel_csv =
      "streams,pre_mean_width,post6_mean_width,width_ratio,final_alpha_mean,"
      "max_miscoverage_gap,max_telescoping_error,min_post_steps\n";
  panel_csv += fmt::format("{},{},{},{},{},{},{},{}\n", panel.streams, panel.pre_mean_width,
                           panel.post6_mean_width, panel.width_ratio, panel.final_alpha_mean,
                           panel.max_miscoverage_gap, panel.max_telescoping_error,
                           panel.min_post_steps);
  write_text(out / "shift_trajectory.csv", trajectory);
  write_text(out / "shift_summary.csv", summary_csv);
  write_text(out / "shift_panel.csv", panel_csv);
  log << fmt::format("{} streams: post/pre ACI width ratio {:.3f}, max |miscoverage - alpha| {:.4f}\n",
                     panel.streams, panel.width_ratio, panel.max_miscoverage_gap);
}

std::string pairs_csv(const ranking::Leaderboard& board) {
  std::string text = "agent_a,agent_b,delta,p_value,decision,mode\n";
  for (const auto& d : board.decisions) {
    text += fmt::format("{},{},{},{},{},{}\n", d.pair.first, d.pair.second, d.delta, d.p_value,
                        ranking::to_string(d.decision), ranking::to_string(board.mode));
  }
  return text;
}

void cmd_rank(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto data = load_data(config);
  std::vector<double> truth;
  for (const auto& s : data.series) {
    const auto* info = data.agent(s.agent_id);
    if (info == nullptr || !info->true_mean) {
      truth.clear();
      break;
    }
    truth.push_back(*info->true_mean);
  }
  RankStudyOptions options;
  options.alpha = config.alpha;
  options.fdr_q = config.fdr_q;
  options.horizon = config.rank_horizon;
  options.train_fraction = config.train_fraction;
  options.reversion_rate = config.reversion_rate;
  const auto study = run_rank_study(data.series, options, truth);

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : study.per_pair.rows) {
    rows.push_back({{"agent_id", row.agent_id},
                    {"score", row.score},
                    {"rank", row.rank},
                    {"interval_lower", row.interval.lower},
                    {"interval_upper", row.interval.upper}});
  }
  write_text(out / "leaderboard.json", rows.dump(2) + "\n");
  write_text(out / "pairs_per_pair.csv", pairs_csv(study.per_pair));
  write_text(out / "pairs_fdr.csv", pairs_csv(study.fdr));

  std::string summary =
      "mode,pairs,ranked,abstained,overall_rate,top10_pairs,top10_rate,false_ranking_rate\n";
  std::string bands = "mode,band,pairs,rate\n";
  auto add = [&](const ranking::Leaderboard& board, const std::optional<double>& false_rate) {
    const auto& s = board.summary;
    summary += fmt::format("{},{},{},{},{},{},{},{}\n", ranking::to_string(board.mode), s.pairs,
                           s.ranked, s.abstained, s.overall_rate, s.top10_pairs, s.top10_rate,
                           false_rate ? format_number(*false_rate) : std::string{});
    for (std::size_t b = 0; b < s.band_rates.size(); ++b) {
      bands += fmt::format("{},{}-{},{},{}\n", ranking::to_string(board.mode), 10 * b + 1,
                           10 * b + 10, s.band_pairs[b], s.band_rates[b]);
    }
    log << fmt::format("{:<8} ranked {} of {} pairs, abstention {:.3f}\n",
                       ranking::to_string(board.mode), s.ranked, s.pairs, s.overall_rate);
  };
  add(study.per_pair, study.per_pair_false_rate);
  add(study.fdr, study.fdr_false_rate);
  write_text(out / "abstention_summary.csv", summary);
  write_text(out / "abstention_bands.csv", bands);
}

std::string sweep_csv(const std::vector<pipeline::SweepRow>& rows) {
  std::string text = "rho,empirical_sigma,independence_bound,worst_case_bound,n\n";
  for (const auto& r : rows) {
    text += fmt::format("{},{},{},{},{}\n", r.rho, r.empirical_sigma, r.independence_bound,
                        r.worst_case_bound, r.samples);
  }
  return text;
}

void cmd_pipeline(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto study = run_pipeline_study(config);
  std::string summary = "quantity,value\n";
  for (const auto& stage : study.stages) {
    summary += fmt::format("{},{}\n", stage.stage_id, stage.sigma);
  }
  summary += fmt::format("independence_bound,{}\nworst_case_bound,{}\n", study.independence,
                         study.worst_case);
  write_text(out / "pipeline_summary.csv", summary);
  write_text(out / "pipeline_sweep_additive.csv", sweep_csv(study.additive));
  write_text(out / "pipeline_sweep_multiplicative.csv", sweep_csv(study.multiplicative));
  log << fmt::format("independence {:.4f}, worst case {:.4f}\n", study.independence,
                     study.worst_case);
}

void cmd_sensitivity(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto data = load_data(config);
  const auto study = run_sensitivity_study(data, config);
  std::string dirichlet = "concentration,median_tau,p05_tau,p95_tau,draws\n";
  for (const auto& row : study.dirichlet) {
    dirichlet += fmt::format("{},{},{},{},{}\n", row.concentration, row.tau.median, row.tau.p05,
                             row.tau.p95, row.tau.draws);
    log << fmt::format("k={:<4} median tau {:.3f}\n", row.concentration, row.tau.median);
  }
  std::string u_model = "agent_id,composite,rank,u_model\n";
  for (const auto& row : study.u_model) {
    u_model += fmt::format("{},{},{},{}\n", row.agent_id, row.composite, row.rank, row.unstable);
  }
  write_text(out / "dirichlet_sensitivity.csv", dirichlet);
  write_text(out / "u_model.csv", u_model);
  if (!study.bootstrap.empty()) {
    std::string ci = "agent_id,observations,mean,lower,upper,level\n";
    for (const auto& row : study.bootstrap) {
      ci += fmt::format("{},{},{},{},{},{}\n", row.agent_id, row.observations, row.ci.center,
                        row.ci.lower, row.ci.upper, row.ci.level);
    }
    write_text(out / "bootstrap_ci.csv", ci);
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "calibrate",   "shift-study",
                                              "rank",     "pipeline", "sensitivity"};
  return names;
}

void execute(std::string_view command, const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const auto started_utc = utc_timestamp();
  const fs::path out = config.out_dir;
  fs::create_directories(out);

  if (command == "simulate") {
    cmd_simulate(config, out, log);
  } else if (command == "calibrate") {
    cmd_calibrate(config, out, log);
  } else if (command == "shift-study") {
    cmd_shift_study(config, out, log);
  } else if (command == "rank") {
    cmd_rank(config, out, log);
  } else if (command == "pipeline") {
    cmd_pipeline(config, out, log);
  } else if (command == "sensitivity") {
    cmd_sensitivity(config, out, log);
  } else {
    throw InvalidInput(fmt::format("unknown command '{}'", command));
  }

  RunManifest manifest;
  manifest.command = std::string(command);
  manifest.config = config;
  manifest.started_utc = started_utc;
  manifest.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  manifest.artifacts = digest_directory(out);
  write_manifest(out, manifest);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calibrated uncertainty for agent score streams", "pulsecal"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string data_dir;
  app.add_option("command", command, "simulate | calibrate | shift-study | rank | pipeline | sensitivity")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--config", config_path, "key = value config file")->required();
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--data", data_dir, "input data directory (overrides the config)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }

  try {
    auto config = load_config(config_path);
    if (seed) {
      config.seed = *seed;
    }
    if (!out_dir.empty()) {
      config.out_dir = out_dir;
    }
    if (!data_dir.empty()) {
      config.data_dir = data_dir;
    }
    execute(command, config, out);
    out << fmt::format("wrote {}\n", (fs::path(config.out_dir) / kManifestFile).string());
    return kExitOk;
  } catch (const InvalidInput& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace pulsecal::harness
