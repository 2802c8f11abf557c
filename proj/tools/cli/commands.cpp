#include "cli/commands.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "semcom/accounting.hpp"
#include "semcom/config.hpp"
#include "semcom/dataset.hpp"
#include "semcom/error.hpp"
#include "semcom/inversion.hpp"
#include "semcom/pipeline.hpp"
#include "semcom/rng.hpp"

namespace semcom::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int fail(std::ostream& err, const fs::path& out, int code,
         const std::string& kind, const std::vector<std::string>& messages) {
  const json doc = {{"error", kind}, {"exit_code", code}, {"messages", messages}};
  err << doc.dump() << '\n';
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream f(out / "error.json");
    if (f) f << doc.dump(2) << '\n';
  }
  return code;
}

// Maps library exceptions onto the exit-code contract.
template <typename Fn>
int guarded(std::ostream& err, const fs::path& out, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    return fail(err, out, kExitConfig, "config", e.problems());
  } catch (const ProtocolDesyncError& e) {
    return fail(err, out, kExitRuntime, "protocol_desync", {e.what()});
  } catch (const DivergenceError& e) {
    return fail(err, out, kExitRuntime, "divergence", {e.what()});
  } catch (const FormatError& e) {
    return fail(err, out, kExitRuntime, "format", {e.what()});
  } catch (const std::exception& e) {
    return fail(err, out, kExitRuntime, "runtime", {e.what()});
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  f << text;
  if (!f) throw Error("cannot write " + path.string());
}

RunResult simulate_into(const SimulationConfig& cfg, const fs::path& dir) {
  RunResult result = run_sequence(cfg);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "records.csv", std::ios::trunc);
    write_records_csv(csv, result.records);
  }
  {
    std::ofstream jl(dir / "records.jsonl", std::ios::trunc);
    write_records_jsonl(jl, result.records);
  }
  write_text(dir / "summary.json",
             summary_document(cfg, result.summary).dump(2) + "\n");
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
  save_cache(result.link.tx_cache, dir / "tx_cache.json");
  save_cache(result.link.rx_cache, dir / "rx_cache.json");
  return result;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": cannot parse '" + s + "' as a number");
  }
}

struct RecordSeries {
  std::vector<double> bcr;
  std::vector<double> psnr;
};

RecordSeries read_record_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  const auto header = split(line, ',');
  auto column = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw FormatError(path + ": missing column '" + name + "'");
  };
  const std::size_t c_index = column("image_index");
  const std::size_t c_bcr = column("bcr");
  const std::size_t c_psnr = column("psnr_db");
  RecordSeries s;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw FormatError(path + ": row " + std::to_string(row + 1) + " has " +
                        std::to_string(cells.size()) + " columns, header has " +
                        std::to_string(header.size()));
    }
    const double idx = parse_number(cells[c_index], path + " column 'image_index'");
    if (idx != static_cast<double>(row)) {
      throw FormatError(path + ": column 'image_index' is not 0,1,2,...");
    }
    s.bcr.push_back(parse_number(cells[c_bcr], path + " column 'bcr'"));
    s.psnr.push_back(parse_number(cells[c_psnr], path + " column 'psnr_db'"));
    ++row;
  }
  return s;
}

}  // namespace

fs::path resolve_out(const std::string& out, const std::string& subcommand) {
  if (!out.empty()) return out;
  if (const char* root = std::getenv(kOutRootEnv); root && *root) {
    return fs::path(root) / subcommand;
  }
  return fs::path("semcom-out") / subcommand;
}

std::string cell_name(double snr_db, std::uint64_t seed) {
  return "snr_" + format_double(snr_db) + "_seed_" + std::to_string(seed);
}

int simulate(const CommonOptions& opts, std::size_t window, std::ostream& err) {
  const fs::path out = resolve_out(opts.out, "simulate");
  return guarded(err, out, [&] {
    auto overrides = opts.overrides;
    if (window > 0) overrides.push_back("report_window=" + std::to_string(window));
    const SimulationConfig cfg = load_config(opts.config, overrides, opts.seed);
    simulate_into(cfg, out);
    return kExitOk;
  });
}

int invert(const CommonOptions& opts, const std::string& dataset,
           std::size_t first, std::size_t count, std::ostream& err) {
  const fs::path out = resolve_out(opts.out, "invert");
  return guarded(err, out, [&] {
    const SimulationConfig cfg = load_config(opts.config, opts.overrides, opts.seed);
    const GeneratorModel model = build_generator(cfg);
    SourceSequence input;
    if (!dataset.empty()) {
      input = load_dataset(dataset);
    } else {
      SimulationConfig src_cfg = cfg;
      src_cfg.num_images = first + count;
      input = build_source(src_cfg, model);
    }
    if (input.images.empty()) {
      throw ConfigError({"dataset: inversion needs a dataset with images"});
    }
    if (input.images.front().shape() != model.image_shape()) {
      throw ConfigError({"dataset: image shape does not match generator"});
    }
    if (first + count > input.images.size()) {
      throw ConfigError({"index: range exceeds dataset size " +
                         std::to_string(input.images.size())});
    }
    InversionConfig inv = cfg.inversion;
    inv.snr_db = cfg.snr_db;
    fs::create_directories(out);

    SourceSequence result;
    result.shape = model.latent_shape();
    json items = json::array();
    for (std::size_t n = first; n < first + count; ++n) {
      const Image& x = input.images[n];
      auto inv_result =
          semcom::invert(model, x, inv, derive_seed(cfg.master_seed, "inversion", n));
      {
        std::ofstream trace(out / ("loss_trace_" + std::to_string(n) + ".csv"));
        write_loss_trace_csv(trace, inv_result.state.loss_trace);
      }
      const Image x_hat = model.forward(inv_result.latent).clamped();
      json item = {{"index", n},
                   {"initial_loss", inv_result.state.loss_trace.front()},
                   {"final_loss", inv_result.state.loss_trace.back()},
                   {"noiseless_psnr_db", psnr(x, x_hat)}};
      if (n < input.latents.size() && input.latents[n].shape() == result.shape) {
        item["latent_cosine_to_source"] =
            cosine(inv_result.latent.values(), input.latents[n].values());
      }
      items.push_back(item);
      result.latents.push_back(std::move(inv_result.latent));
      result.images.push_back(x);
    }
    save_dataset(result, out / "inverted.json");
    json summary = {{"items", items},
                    {"provenance",
                     {{"config_hash", config_hash(cfg)},
                      {"master_seed", cfg.master_seed},
                      {"version", kVersion}}}};
    write_text(out / "invert_summary.json", summary.dump(2) + "\n");
    return kExitOk;
  });
}

int gen_dataset(const CommonOptions& opts, std::optional<std::size_t> count,
                const std::string& dtype, std::ostream& err) {
  const fs::path out = resolve_out(opts.out, "gen-dataset");
  return guarded(err, out, [&] {
    SimulationConfig cfg = load_config(opts.config, opts.overrides, opts.seed);
    if (count) cfg.num_images = *count;
    cfg.validate();
    if (cfg.source.kind != SourceSpec::Kind::synthetic) {
      throw ConfigError({"source.kind: gen-dataset needs a synthetic source"});
    }
    const GeneratorModel model = build_generator(cfg);
    const SourceSequence seq = build_source(cfg, model);
    fs::create_directories(out);
    save_dataset(seq, out / "dataset.json", dtype);
    save_generator(model, out / "generator.json");
    write_text(out / "config.json", to_json(cfg).dump(2) + "\n");
    return kExitOk;
  });
}

int report(const std::vector<std::string>& records,
           const std::string& sweep_index, std::size_t window,
           const std::string& out_flag, std::ostream& err) {
  const fs::path out = resolve_out(out_flag, "report");
  return guarded(err, out, [&] {
    if (window == 0) throw ConfigError({"window: must be >= 1"});
    if (records.empty() && sweep_index.empty()) {
      throw ConfigError({"inputs: pass records CSV files and/or --sweep-index"});
    }
    fs::create_directories(out);
    if (!records.empty()) {
      std::vector<RecordSeries> series;
      std::size_t longest = 0;
      for (const auto& path : records) {
        series.push_back(read_record_series(path));
        longest = std::max(longest, series.back().bcr.size());
      }
      std::vector<double> bcr_mean(longest, 0.0);
      std::vector<double> psnr_mean(longest, 0.0);
      std::vector<std::size_t> runs(longest, 0);
      for (const auto& s : series) {
        for (std::size_t n = 0; n < s.bcr.size(); ++n) {
          bcr_mean[n] += s.bcr[n];
          psnr_mean[n] += s.psnr[n];
          ++runs[n];
        }
      }
      for (std::size_t n = 0; n < longest; ++n) {
        bcr_mean[n] /= static_cast<double>(runs[n]);
        psnr_mean[n] /= static_cast<double>(runs[n]);
      }
      const auto ma = moving_average(bcr_mean, window);
      std::ofstream csv(out / "bcr_curve.csv", std::ios::trunc);
      csv << "image_index,bcr_mean,bcr_moving_average,psnr_mean,n_runs\n";
      for (std::size_t n = 0; n < longest; ++n) {
        csv << n << ',' << format_double(bcr_mean[n]) << ','
            << format_double(ma[n]) << ',' << format_double(psnr_mean[n]) << ','
            << runs[n] << '\n';
      }
    }
    if (!sweep_index.empty()) {
      std::ifstream in(sweep_index);
      if (!in) throw FormatError("cannot open " + sweep_index);
      json idx;
      try {
        idx = json::parse(in);
      } catch (const json::parse_error& e) {
        throw FormatError(sweep_index + ": " + e.what());
      }
      if (!idx.contains("cells") || !idx["cells"].is_array()) {
        throw FormatError(sweep_index + ": missing field 'cells'");
      }
      struct Acc {
        double psnr = 0.0, bcr = 0.0, perceptual = 0.0;
        std::size_t n = 0;
      };
      std::map<double, Acc> by_snr;
      for (const auto& cell : idx["cells"]) {
        if (cell.value("status", "") != "ok") continue;
        for (const char* key :
             {"snr_db", "mean_psnr_db", "mean_bcr", "mean_perceptual_distance"}) {
          if (!cell.contains(key)) {
            throw FormatError(sweep_index + ": cell missing field '" + key + "'");
          }
        }
        const auto& snr_field = cell["snr_db"];
        const double snr = snr_field.is_string() ? kInfiniteSnr
                                                 : snr_field.get<double>();
        Acc& a = by_snr[snr];
        a.psnr += cell["mean_psnr_db"].get<double>();
        a.bcr += cell["mean_bcr"].get<double>();
        a.perceptual += cell["mean_perceptual_distance"].get<double>();
        ++a.n;
      }
      std::ofstream csv(out / "psnr_vs_snr.csv", std::ios::trunc);
      csv << "snr_db,mean_psnr_db,mean_perceptual_distance,mean_bcr,n_cells\n";
      for (const auto& [snr, a] : by_snr) {
        const double n = static_cast<double>(a.n);
        csv << format_double(snr) << ',' << format_double(a.psnr / n) << ','
            << format_double(a.perceptual / n) << ',' << format_double(a.bcr / n)
            << ',' << a.n << '\n';
      }
    }
    return kExitOk;
  });
}

int sweep(const CommonOptions& opts, const SweepAxes& axes, std::size_t jobs,
          std::ostream& err) {
  const fs::path out = resolve_out(opts.out, "sweep");
  return guarded(err, out, [&] {
    if (axes.snr_db.empty() || axes.seeds.empty()) {
      throw ConfigError({"axes: --snr and --seeds need at least one value each"});
    }
    // Validate the base config once so config errors exit with code 2.
    load_config(opts.config, opts.overrides, opts.seed);

    struct Cell {
      double snr;
      std::uint64_t seed;
      json result;
    };
    std::vector<Cell> cells;
    for (double snr : axes.snr_db) {
      for (std::uint64_t seed : axes.seeds) cells.push_back({snr, seed, {}});
    }
    fs::create_directories(out);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t c = next++; c < cells.size(); c = next++) {
        Cell& cell = cells[c];
        const std::string name = cell_name(cell.snr, cell.seed);
        json r = {{"cell", name},
                  {"dir", name},
                  {"snr_db", std::isinf(cell.snr) ? json("inf") : json(cell.snr)},
                  {"seed", cell.seed}};
        try {
          auto overrides = opts.overrides;
          overrides.push_back("channel.snr_db=" + format_double(cell.snr));
          const SimulationConfig cfg =
              load_config(opts.config, overrides, cell.seed);
          const RunResult res = simulate_into(cfg, out / name);
          r["status"] = "ok";
          r["mean_bcr"] = res.summary.mean_bcr;
          r["mean_psnr_db"] = res.summary.mean_psnr_db;
          r["mean_perceptual_distance"] = res.summary.mean_perceptual_distance;
          r["config_hash"] = config_hash(cfg);
        } catch (const std::exception& e) {
          r["status"] = "failed";
          r["error"] = e.what();
        }
        cell.result = std::move(r);
      }
    };
    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min(jobs, cells.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    json index = {{"cells", json::array()}, {"version", kVersion}};
    std::vector<std::string> failures;
    for (const auto& cell : cells) {
      index["cells"].push_back(cell.result);
      if (cell.result["status"] != "ok") {
        failures.push_back(cell.result["cell"].get<std::string>() + ": " +
                           cell.result["error"].get<std::string>());
      }
    }
    write_text(out / "index.json", index.dump(2) + "\n");
    if (!failures.empty()) {
      err << json({{"error", "sweep_cells_failed"}, {"messages", failures}}).dump()
          << '\n';
      return kExitFailure;
    }
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& err) {
  CLI::App app{"Cache-enabled evolving semantic communication simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON config file");
    sub->add_option("--override", common.overrides,
                    "dotted key=value override (repeatable)");
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", common.seed, "master seed override");
  };

  std::size_t window = 0;
  auto* sim = app.add_subcommand("simulate", "run one image sequence");
  add_common(sim);
  sim->add_option("--window", window, "moving-average window for the summary");

  std::string dataset;
  std::size_t first = 0;
  std::size_t count = 1;
  auto* inv = app.add_subcommand("invert", "channel-aware inversion of images");
  add_common(inv);
  inv->add_option("--dataset", dataset, "dataset manifest with images");
  inv->add_option("--index", first, "first item to invert");
  inv->add_option("--count", count, "number of items")->check(CLI::PositiveNumber);

  std::optional<std::size_t> gen_count;
  std::string dtype = "f32le";
  auto* gen = app.add_subcommand("gen-dataset", "write a synthetic dataset");
  add_common(gen);
  gen->add_option("--count", gen_count, "number of items (default num_images)");
  gen->add_option("--dtype", dtype, "f32le or f64le")
      ->check(CLI::IsMember({"f32le", "f64le"}));

  std::vector<std::string> record_files;
  std::string sweep_index;
  std::size_t report_window = 10;
  std::string report_out;
  auto* rep = app.add_subcommand("report", "aggregate records into plot data");
  rep->add_option("records", record_files, "records CSV files");
  rep->add_option("--sweep-index", sweep_index, "sweep index.json");
  rep->add_option("--window", report_window, "moving-average window");
  rep->add_option("--out", report_out, "output directory");

  SweepAxes axes;
  std::size_t jobs = 1;
  auto* swp = app.add_subcommand("sweep", "run an SNR x seed grid");
  add_common(swp);
  swp->add_option("--snr", axes.snr_db, "SNR values in dB")->delimiter(',');
  swp->add_option("--seeds", axes.seeds, "master seeds")->delimiter(',');
  swp->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cout, err);
    return code == 0 ? kExitOk : kExitFailure;
  }

  if (*sim) return simulate(common, window, err);
  if (*inv) return invert(common, dataset, first, count, err);
  if (*gen) return gen_dataset(common, gen_count, dtype, err);
  if (*rep) return report(record_files, sweep_index, report_window, report_out, err);
  if (*swp) return sweep(common, axes, jobs, err);
  return kExitFailure;
}

}  // namespace semcom::cli
