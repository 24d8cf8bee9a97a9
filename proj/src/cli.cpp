#include "mvsense/cli.hpp"

#include "mvsense/interop.hpp"
#include "mvsense/link.hpp"
#include "mvsense/parallel.hpp"
#include "mvsense/tensor_io.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>

namespace mvsense::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string index_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

json number_or_inf(double v) {
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  return v;
}

double json_number(const json &v, const std::string &where) {
  if (v.is_number())
    return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf")
      return std::numeric_limits<double>::infinity();
    if (s == "-inf")
      return -std::numeric_limits<double>::infinity();
  }
  throw InvalidArgument(where + ": expected a number");
}

template <typename T> T json_get(const json &j, const std::string &where) {
  try {
    return j.get<T>();
  } catch (const json::exception &e) {
    throw InvalidArgument(where + ": " + e.what());
  }
}

void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &where) {
  if (!j.is_object())
    throw InvalidArgument(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw InvalidArgument(where + ": unknown key '" + it.key() + "'");
}

json bim_to_json(const BimConfig &b) {
  json j;
  j["num_born_iters"] = b.num_born_iters;
  j["cs_weight"] = b.cs_weight ? json(*b.cs_weight) : json(nullptr);
  j["cs_weight_factor"] = b.cs_weight_factor;
  j["x_max"] = b.x_max ? json(*b.x_max) : json(nullptr);
  j["tolerance"] = b.solver.tolerance;
  j["max_iterations"] = b.solver.max_iterations;
  j["step_control"] = b.step_control;
  j["max_step_halvings"] = b.max_step_halvings;
  return j;
}

BimConfig bim_from_json(const json &j) {
  reject_unknown(j,
                 {"num_born_iters", "cs_weight", "cs_weight_factor", "x_max", "tolerance", "max_iterations",
                  "step_control", "max_step_halvings"},
                 "bim");
  BimConfig b;
  if (j.contains("num_born_iters"))
    b.num_born_iters = json_get<int>(j["num_born_iters"], "bim.num_born_iters");
  if (j.contains("cs_weight") && !j["cs_weight"].is_null())
    b.cs_weight = json_number(j["cs_weight"], "bim.cs_weight");
  if (j.contains("cs_weight_factor"))
    b.cs_weight_factor = json_number(j["cs_weight_factor"], "bim.cs_weight_factor");
  if (j.contains("x_max") && !j["x_max"].is_null())
    b.x_max = json_get<std::array<double, 2>>(j["x_max"], "bim.x_max");
  if (j.contains("tolerance"))
    b.solver.tolerance = json_number(j["tolerance"], "bim.tolerance");
  if (j.contains("max_iterations"))
    b.solver.max_iterations = json_get<int>(j["max_iterations"], "bim.max_iterations");
  if (j.contains("step_control"))
    b.step_control = json_get<bool>(j["step_control"], "bim.step_control");
  if (j.contains("max_step_halvings"))
    b.max_step_halvings = json_get<int>(j["max_step_halvings"], "bim.max_step_halvings");
  return b;
}

ChannelSet truncate_channels(const ChannelSet &set, int num_bs, int num_ue) {
  if (num_bs > set.num_bs || num_ue > set.num_ue)
    throw InvalidArgument("requested " + std::to_string(num_bs) + "x" + std::to_string(num_ue) +
                          " views but the sample has " + std::to_string(set.num_bs) + "x" +
                          std::to_string(set.num_ue));
  ChannelSet out;
  out.num_bs = num_bs;
  out.num_ue = num_ue;
  for (int b = 0; b < num_bs; ++b)
    for (int u = 0; u < num_ue; ++u)
      out.entries.push_back(set.at(b, u));
  return out;
}

fs::path resolve_output(const std::string &flag, const std::string &command) {
  if (!flag.empty())
    return flag;
  if (const char *root = std::getenv(kOutputRootEnv); root && *root)
    return fs::path(root) / command;
  throw InvalidArgument(std::string("missing output directory: pass --out or set ") + kOutputRootEnv);
}

json load_config_file(const std::string &path) {
  if (path.empty())
    return json::object();
  std::ifstream f(path);
  if (!f)
    throw InvalidArgument("cannot open config file " + path);
  try {
    auto j = json::parse(f, nullptr, true, true);
    if (!j.is_object())
      throw InvalidArgument("config file " + path + " must hold a JSON object");
    return j;
  } catch (const json::exception &e) {
    throw InvalidArgument("config file " + path + ": " + e.what());
  }
}

void write_snapshot(const fs::path &out_dir, const std::string &command, const std::string &config_file,
                    std::uint64_t seed, const std::vector<std::string> &overrides, const json &resolved) {
  fs::create_directories(out_dir);
  json j;
  j["command"] = command;
  j["config_file"] = config_file;
  j["seed"] = seed;
  j["output"] = out_dir.string();
  j["overrides"] = overrides;
  j["resolved"] = resolved;
  write_json_file(out_dir / "run_config.json", j);
}

json method_json(const BimResult &r, const ReconstructionCloud &rc, const EvalRecord &rec) {
  json j;
  j["method"] = rec.method;
  j["views"] = {rec.num_bs, rec.num_ue};
  j["snr_db"] = number_or_inf(rec.snr_db);
  j["log_cd_db"] = number_or_inf(rec.log_cd);
  j["zero_cd"] = rec.zero_cd;
  j["residuals"] = r.residuals;
  j["fit_residuals"] = r.fit_residuals;
  j["cs_weights"] = r.cs_weights;
  j["step_sizes"] = r.step_sizes;
  j["inner_iterations"] = r.inner_iterations;
  j["stalled"] = r.stalled;
  int mask = 0;
  for (bool b : rc.kmeans.mask)
    mask += b ? 1 : 0;
  j["kmeans"] = {{"low_centroid", rc.kmeans.low_centroid},
                 {"high_centroid", rc.kmeans.high_centroid},
                 {"iterations", rc.kmeans.iterations},
                 {"degenerate", rc.kmeans.degenerate},
                 {"target_pixels", mask}};
  return j;
}

} // namespace

void apply_override(json &tree, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw InvalidArgument("override '" + assignment + "' is not of the form key=value");
  const auto key = assignment.substr(0, eq);
  const auto text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception &) {
    value = text;
  }
  json *node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty())
      throw InvalidArgument("override key '" + key + "' has an empty component");
    if (node->is_null())
      *node = json::object();
    if (!node->is_object())
      throw InvalidArgument("override key '" + key + "' descends into a non-object");
    node = &(*node)[part];
    if (dot == std::string::npos)
      break;
    start = dot + 1;
  }
  *node = value;
}

std::pair<int, int> parse_views(const std::string &text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos)
      throw std::invalid_argument("no separator");
    std::size_t p1 = 0, p2 = 0;
    const int b = std::stoi(text.substr(0, x), &p1);
    const int u = std::stoi(text.substr(x + 1), &p2);
    if (p1 != x || p2 != text.size() - x - 1 || b < 1 || u < 1)
      throw std::invalid_argument("bad counts");
    return {b, u};
  } catch (const std::logic_error &) {
    throw InvalidArgument("views must look like BxU with positive counts, got '" + text + "'");
  }
}

std::vector<BimVariant> ReconstructConfig::variants() const {
  if (method == "bim")
    return {BimVariant::LS};
  if (method == "bim-cs")
    return {BimVariant::CS};
  if (method == "both")
    return {BimVariant::LS, BimVariant::CS};
  throw InvalidArgument("unknown method '" + method + "' (bim, bim-cs or both)");
}

void ReconstructConfig::validate() const {
  if (dataset.empty())
    throw InvalidArgument("reconstruct: dataset directory is required");
  (void)variants();
  if (split != "train" && split != "val" && split != "test" && split != "all")
    throw InvalidArgument("unknown split '" + split + "' (train, val, test or all)");
  if (limit < 0 || points < 0)
    throw InvalidArgument("limit and points must be non-negative");
  if (views && (views->first < 1 || views->second < 1))
    throw InvalidArgument("views must be positive");
  if (noiseless && use_stored_ls)
    throw InvalidArgument("noiseless and stored LS channels are exclusive");
  if (!noiseless && !use_stored_ls) {
    PilotConfig p;
    p.num_symbols = pilots;
    p.snr_db = snr_db;
    p.validate();
  }
  bim.validate();
}

ReconstructConfig ReconstructConfig::from_json(const json &j) {
  reject_unknown(j,
                 {"dataset", "method", "split", "limit", "views", "noiseless", "use_stored_ls", "snr_db", "pilots",
                  "radar", "seed", "points", "workers", "bim"},
                 "reconstruct");
  ReconstructConfig c;
  if (j.contains("dataset"))
    c.dataset = json_get<std::string>(j["dataset"], "dataset");
  if (j.contains("method"))
    c.method = json_get<std::string>(j["method"], "method");
  if (j.contains("split"))
    c.split = json_get<std::string>(j["split"], "split");
  if (j.contains("limit"))
    c.limit = json_get<int>(j["limit"], "limit");
  if (j.contains("views") && !j["views"].is_null()) {
    if (j["views"].is_string())
      c.views = parse_views(j["views"].get<std::string>());
    else
      c.views = json_get<std::pair<int, int>>(j["views"], "views");
  }
  if (j.contains("noiseless"))
    c.noiseless = json_get<bool>(j["noiseless"], "noiseless");
  if (j.contains("use_stored_ls"))
    c.use_stored_ls = json_get<bool>(j["use_stored_ls"], "use_stored_ls");
  if (j.contains("snr_db"))
    c.snr_db = json_number(j["snr_db"], "snr_db");
  if (j.contains("pilots"))
    c.pilots = json_get<int>(j["pilots"], "pilots");
  if (j.contains("radar"))
    c.radar = json_get<bool>(j["radar"], "radar");
  if (j.contains("seed"))
    c.seed = json_get<std::uint64_t>(j["seed"], "seed");
  if (j.contains("points"))
    c.points = json_get<int>(j["points"], "points");
  if (j.contains("workers"))
    c.workers = json_get<int>(j["workers"], "workers");
  if (j.contains("bim"))
    c.bim = bim_from_json(j["bim"]);
  return c;
}

json ReconstructConfig::to_json() const {
  json j;
  j["dataset"] = dataset.string();
  j["method"] = method;
  j["split"] = split;
  j["limit"] = limit;
  j["views"] = views ? json{views->first, views->second} : json(nullptr);
  j["noiseless"] = noiseless;
  j["use_stored_ls"] = use_stored_ls;
  j["snr_db"] = number_or_inf(snr_db);
  j["pilots"] = pilots;
  j["radar"] = radar;
  j["seed"] = seed;
  j["points"] = points;
  j["workers"] = workers;
  j["bim"] = bim_to_json(bim);
  return j;
}

ReconstructReport reconstruct_dataset(const ReconstructConfig &cfg, const fs::path &out_dir, std::ostream &log) {
  cfg.validate();
  const auto m = load_manifest(cfg.dataset);
  const auto [begin, end] = m.splits.range(cfg.split);
  int count = end - begin;
  if (cfg.limit > 0)
    count = std::min(count, cfg.limit);
  const auto views = cfg.views.value_or(std::pair{m.config.num_bs, m.config.num_ue});
  if (views.first > m.config.num_bs || views.second > m.config.num_ue)
    throw InvalidArgument("views " + std::to_string(views.first) + "x" + std::to_string(views.second) +
                          " exceed the dataset's " + std::to_string(m.config.num_bs) + "x" +
                          std::to_string(m.config.num_ue));
  const int num_points = cfg.points > 0 ? cfg.points : m.config.num_points;
  const auto variants = cfg.variants();
  const auto grid = m.config.grid();
  const double snr_label = cfg.noiseless ? std::numeric_limits<double>::infinity()
                           : cfg.use_stored_ls && m.config.link ? m.config.link->snr_db
                                                                : cfg.snr_db;

  fs::create_directories(out_dir / "samples");
  struct Slot {
    std::vector<EvalRecord> records;
    std::vector<ReconstructFailure> failures;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(std::max(count, 0)));
  std::mutex io_mu;

  parallel_for(count, cfg.workers, [&](int k) {
    const int index = begin + k;
    auto &slot = slots[static_cast<std::size_t>(k)];
    auto fail = [&](const std::string &method, const std::string &what) {
      slot.failures.push_back({index, method, what});
      std::lock_guard lock(io_mu);
      log << "sample " << index << " " << method << ": " << what << '\n';
    };

    ChannelSet channels;
    ViewLayout layout;
    PointCloud truth;
    try {
      auto s = load_sample(cfg.dataset, m, index);
      layout = s.layout.truncated(views.first, views.second);
      if (cfg.use_stored_ls) {
        if (!s.channels_ls)
          throw FormatError("dataset has no stored LS channels");
        channels = truncate_channels(*s.channels_ls, views.first, views.second);
      } else {
        channels = truncate_channels(s.channels, views.first, views.second);
        if (!cfg.noiseless) {
          PilotConfig pilot;
          pilot.num_symbols = cfg.pilots;
          pilot.snr_db = cfg.snr_db;
          pilot.seed = cfg.seed;
          if (cfg.radar)
            pilot.radar = SnrModel::for_physics(m.config.physics);
          channels = estimate_channels(channels, pilot, static_cast<std::uint64_t>(index));
        }
      }
      truth = std::move(s.points);
    } catch (const std::exception &e) {
      for (auto v : variants)
        fail(variant_name(v), e.what());
      return;
    }

    std::optional<InversionOperators> ops;
    try {
      ops = build_operators(grid, layout, m.config.physics);
    } catch (const std::exception &e) {
      for (auto v : variants)
        fail(variant_name(v), e.what());
      return;
    }

    for (auto v : variants) {
      const std::string method = variant_name(v);
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = bim(channels, *ops, cfg.bim, v);
        const auto recon = bim_scene(r, grid);
        Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(index), Stream::Misc);
        const auto rc = reconstruction_cloud(recon, m.config.physics, num_points, rng);
        const auto cloud = m.norm_stats.normalize(rc.raw);
        const double cd = chamfer(cloud, truth);
        const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        EvalRecord rec;
        rec.sample_id = index_name(index);
        rec.method = method;
        rec.log_cd = log_cd(cd);
        rec.zero_cd = cd == 0.0;
        rec.runtime_s = runtime;
        rec.num_bs = views.first;
        rec.num_ue = views.second;
        rec.snr_db = snr_label;

        const auto dir = out_dir / "samples" / index_name(index);
        const auto res = static_cast<std::size_t>(grid.resolution());
        std::lock_guard lock(io_mu);
        fs::create_directories(dir);
        write_f64(dir / (method + "_eps_r.bin"), {res, res}, recon.eps_r);
        write_f64(dir / (method + "_sigma.bin"), {res, res}, recon.sigma);
        write_point_cloud(dir / (method + "_points.bin"), cloud);
        write_json_file(dir / (method + ".json"), method_json(r, rc, rec));
        log << "sample " << index << " " << method << ": log-CD " << rec.log_cd << " dB, residual "
            << r.residuals.back() << ", " << runtime << " s\n";
        slot.records.push_back(std::move(rec));
      } catch (const std::exception &e) {
        fail(method, e.what());
      }
    }
  });

  ReconstructReport report;
  for (auto &s : slots) {
    report.records.insert(report.records.end(), s.records.begin(), s.records.end());
    report.failures.insert(report.failures.end(), s.failures.begin(), s.failures.end());
  }
  write_records_csv(out_dir / "records.csv", report.records);
  json summary;
  summary["dataset"] = cfg.dataset.string();
  summary["split"] = cfg.split;
  summary["samples"] = count;
  summary["views"] = {views.first, views.second};
  summary["records"] = report.records.size();
  json failures = json::array();
  for (const auto &f : report.failures)
    failures.push_back({{"index", f.index}, {"method", f.method}, {"error", f.error}});
  summary["failures"] = failures;
  write_json_file(out_dir / "reconstruct.json", summary);
  return report;
}

void EvalConfig::validate() const {
  if (records.empty() && predictions.empty())
    throw InvalidArgument("eval: pass --records and/or --predictions");
  if ((!predictions.empty() || !latents.empty()) && dataset.empty())
    throw InvalidArgument("eval: --predictions and --latents need --dataset");
  if (split != "train" && split != "val" && split != "test" && split != "all")
    throw InvalidArgument("unknown split '" + split + "' (train, val, test or all)");
}

json EvalConfig::to_json() const {
  json j;
  json recs = json::array();
  for (const auto &r : records)
    recs.push_back(r.string());
  j["records"] = recs;
  j["predictions"] = predictions.string();
  j["prediction_method"] = prediction_method;
  j["dataset"] = dataset.string();
  j["split"] = split;
  j["prediction_views"] = prediction_views ? json{prediction_views->first, prediction_views->second} : json(nullptr);
  j["latents"] = latents.string();
  json grid = json::array();
  for (const auto &[b, u] : grid_views)
    grid.push_back({b, u});
  j["grid_views"] = grid;
  return j;
}

std::vector<EvalRecord> prediction_records(const fs::path &dataset_dir, const DatasetManifest &m,
                                           const fs::path &predictions, const std::string &method,
                                           std::pair<int, int> views) {
  std::vector<EvalRecord> out;
  for (const auto &[index, cloud] : load_predictions(predictions)) {
    if (index >= m.config.num_samples)
      throw FormatError("prediction " + prediction_path(predictions, index).string() +
                        " has no matching dataset sample");
    const auto truth = read_point_cloud(sample_dir(dataset_dir, index) / "points.bin");
    const double cd = chamfer(cloud, truth);
    EvalRecord r;
    r.sample_id = index_name(index);
    r.method = method;
    r.log_cd = log_cd(cd);
    r.zero_cd = cd == 0.0;
    r.num_bs = views.first;
    r.num_ue = views.second;
    r.snr_db = m.config.link ? m.config.link->snr_db : std::numeric_limits<double>::infinity();
    out.push_back(std::move(r));
  }
  return out;
}

json evaluate(const EvalConfig &cfg, const fs::path &out_dir, std::ostream &log) {
  cfg.validate();
  std::vector<EvalRecord> records;
  for (const auto &p : cfg.records) {
    auto r = read_records_csv(p);
    log << "read " << r.size() << " records from " << p.string() << '\n';
    records.insert(records.end(), r.begin(), r.end());
  }
  std::optional<DatasetManifest> m;
  if (!cfg.dataset.empty())
    m = load_manifest(cfg.dataset);
  if (!cfg.predictions.empty()) {
    const auto views = cfg.prediction_views.value_or(std::pair{m->config.num_bs, m->config.num_ue});
    auto r = prediction_records(cfg.dataset, *m, cfg.predictions, cfg.prediction_method, views);
    log << "scored " << r.size() << " predicted clouds from " << cfg.predictions.string() << '\n';
    records.insert(records.end(), r.begin(), r.end());
  }
  if (records.empty())
    throw std::runtime_error("eval: no records to evaluate");

  const auto summaries = aggregate(records);
  const auto grid = view_grid(records, cfg.grid_views);
  fs::create_directories(out_dir);
  write_records_csv(out_dir / "records.csv", records);
  write_cdf_csv(out_dir / "cdf.csv", summaries);
  write_summary_json(out_dir / "summary.json", summaries, grid);
  auto summary = read_json_file(out_dir / "summary.json");

  if (!cfg.latents.empty()) {
    const auto table = load_latent_table(cfg.latents);
    const auto [b, e] = m->splits.range(cfg.split);
    if (table.rows() != e - b)
      throw FormatError("latent table " + cfg.latents.string() + " has " + std::to_string(table.rows()) +
                        " rows but split '" + cfg.split + "' has " + std::to_string(e - b) + " samples");
    std::set<int> classes(table.shape_class.begin(), table.shape_class.end());
    summary["latents"] = {{"path", cfg.latents.string()},
                          {"rows", table.rows()},
                          {"latent_dim", table.latent_dim()},
                          {"shape_classes", classes.size()}};
    write_json_file(out_dir / "summary.json", summary);
  }
  return summary;
}

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App *cmd, CommonFlags &f, bool with_config) {
  if (with_config)
    cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--out", f.out, std::string("Output directory (default $") + kOutputRootEnv + "/<command>)");
  if (with_config)
    cmd->add_option("overrides", f.overrides, "key=value overrides applied after flags");
}

int cmd_gen_dataset(const CommonFlags &f, const json &flag_tree, std::ostream &out, std::ostream &err) {
  auto tree = load_config_file(f.config);
  tree.merge_patch(flag_tree);
  for (const auto &o : f.overrides)
    apply_override(tree, o);
  const auto cfg = DatasetConfig::from_json(tree);
  cfg.validate();
  const auto dir = resolve_output(f.out, "gen-dataset");
  write_snapshot(dir, "gen-dataset", f.config, cfg.seed, f.overrides, cfg.to_json());
  err << "generating " << cfg.num_samples << " samples into " << dir.string() << '\n';
  const auto m = build_dataset(cfg, dir);
  out << "dataset " << dir.string() << ": " << cfg.num_samples << " samples (train "
      << m.splits.train_end - m.splits.train_begin << ", val " << m.splits.val_end - m.splits.val_begin
      << ", test " << m.splits.test_end - m.splits.test_begin << ")\n";
  return kExitOk;
}

int cmd_reconstruct(const CommonFlags &f, const json &flag_tree, std::ostream &out, std::ostream &err) {
  auto tree = load_config_file(f.config);
  tree.merge_patch(flag_tree);
  for (const auto &o : f.overrides)
    apply_override(tree, o);
  const auto cfg = ReconstructConfig::from_json(tree);
  cfg.validate();
  const auto dir = resolve_output(f.out, "reconstruct");
  write_snapshot(dir, "reconstruct", f.config, cfg.seed, f.overrides, cfg.to_json());
  const auto report = reconstruct_dataset(cfg, dir, err);
  out << "reconstruct " << dir.string() << ": " << report.records.size() << " records, "
      << report.failures.size() << " failures\n";
  if (report.records.empty() && !report.failures.empty())
    return kExitRun;
  return kExitOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Multi-view wireless sensing toolkit"};
  app.name("mvsense");
  app.require_subcommand(1);

  // gen-dataset
  CommonFlags gen_flags;
  std::optional<std::uint64_t> gen_seed;
  std::optional<int> gen_samples, gen_grid, gen_bs, gen_ue, gen_subcarriers, gen_points, gen_workers, gen_pilots;
  std::optional<double> gen_link_snr;
  std::string gen_kind, gen_idx_images, gen_idx_labels;
  auto *gen = app.add_subcommand("gen-dataset", "Generate a dataset directory");
  add_common(gen, gen_flags, true);
  gen->add_option("--seed", gen_seed, "Manifest seed");
  gen->add_option("--samples", gen_samples, "Number of samples");
  gen->add_option("--grid", gen_grid, "RoI resolution (pixels per side)");
  gen->add_option("--bs", gen_bs, "Base stations per sample");
  gen->add_option("--ue", gen_ue, "UEs per sample");
  gen->add_option("--subcarriers", gen_subcarriers, "OFDM subcarriers");
  gen->add_option("--points", gen_points, "Ground-truth points per sample");
  gen->add_option("--workers", gen_workers, "Worker threads (0 = all cores)");
  gen->add_option("--dataset", gen_kind, "Target generator: mnist or multi-obj");
  gen->add_option("--idx-images", gen_idx_images, "MNIST IDX image file (switches to IDX digits)");
  gen->add_option("--idx-labels", gen_idx_labels, "MNIST IDX label file");
  gen->add_option("--link-snr", gen_link_snr, "Also store LS channel estimates at this SNR (dB)");
  gen->add_option("--pilots", gen_pilots, "Pilot symbols for stored LS estimates");

  // reconstruct
  CommonFlags rec_flags;
  std::string rec_dataset, rec_method, rec_views, rec_split;
  std::optional<double> rec_snr, rec_cs_weight, rec_cs_factor;
  std::optional<int> rec_pilots, rec_limit, rec_points, rec_workers, rec_iters, rec_inner;
  std::optional<std::uint64_t> rec_seed;
  bool rec_noiseless = false, rec_stored = false, rec_radar = false;
  auto *rec = app.add_subcommand("reconstruct", "Run BIM / BIM-CS over a dataset split");
  add_common(rec, rec_flags, true);
  rec->add_option("--dataset", rec_dataset, "Dataset directory");
  rec->add_option("--method", rec_method, "bim, bim-cs or both");
  rec->add_option("--snr", rec_snr, "Per-antenna pilot SNR in dB");
  rec->add_option("--pilots", rec_pilots, "Pilot symbols per channel");
  rec->add_flag("--noiseless", rec_noiseless, "Use the exact channels");
  rec->add_flag("--stored-ls", rec_stored, "Use the dataset's stored LS estimates");
  rec->add_flag("--radar", rec_radar, "Per-view SNR from the radar equation");
  rec->add_option("--views", rec_views, "BxU subset of each sample's views");
  rec->add_option("--split", rec_split, "train, val, test or all");
  rec->add_option("--limit", rec_limit, "At most this many samples");
  rec->add_option("--seed", rec_seed, "Noise and point-sampling seed");
  rec->add_option("--points", rec_points, "Points per reconstructed cloud");
  rec->add_option("--workers", rec_workers, "Worker threads (0 = all cores)");
  rec->add_option("--cs-weight", rec_cs_weight, "Absolute group-sparsity weight");
  rec->add_option("--cs-weight-factor", rec_cs_factor, "Weight as a fraction of ||A'h||_inf / ||h||");
  rec->add_option("--iters", rec_iters, "Born iterations");
  rec->add_option("--inner", rec_inner, "Inner solver iteration cap");

  // eval
  CommonFlags eval_flags;
  std::vector<std::string> eval_records;
  std::string eval_pred, eval_method = "gen-mv", eval_dataset, eval_split = "test", eval_views, eval_latents;
  auto *ev = app.add_subcommand("eval", "Aggregate records and predicted clouds");
  add_common(ev, eval_flags, false);
  ev->add_option("--records", eval_records, "Records CSV (repeatable)");
  ev->add_option("--predictions", eval_pred, "Directory of NNNNNN.bin predicted clouds");
  ev->add_option("--pred-method", eval_method, "Method label for predictions");
  ev->add_option("--dataset", eval_dataset, "Dataset directory for ground truth");
  ev->add_option("--split", eval_split, "Split the latent table covers");
  ev->add_option("--pred-views", eval_views, "BxU label for predictions");
  ev->add_option("--latents", eval_latents, "Latent table to validate and summarize");

  // inspect
  std::string insp_dataset, insp_tensor;
  std::optional<int> insp_sample;
  auto *insp = app.add_subcommand("inspect", "Describe a dataset, a sample or a tensor file");
  insp->add_option("--dataset", insp_dataset, "Dataset directory");
  insp->add_option("--sample", insp_sample, "Sample index");
  insp->add_option("--tensor", insp_tensor, "Tensor file");

  // simulate
  CommonFlags sim_flags;
  std::string sim_dataset, sim_views;
  int sim_sample = 0, sim_pilots = 32;
  double sim_snr = 20.0;
  std::uint64_t sim_seed = 0;
  bool sim_radar = false;
  auto *sim = app.add_subcommand("simulate", "Simulate pilots and LS estimates for one sample");
  add_common(sim, sim_flags, false);
  sim->add_option("--dataset", sim_dataset, "Dataset directory")->required();
  sim->add_option("--sample", sim_sample, "Sample index");
  sim->add_option("--snr", sim_snr, "Per-antenna pilot SNR in dB");
  sim->add_option("--pilots", sim_pilots, "Pilot symbols per channel");
  sim->add_option("--views", sim_views, "BxU subset of views");
  sim->add_option("--seed", sim_seed, "Noise seed");
  sim->add_flag("--radar", sim_radar, "Per-view SNR from the radar equation");

  std::vector<const char *> argv{"mvsense"};
  for (const auto &a : args)
    argv.push_back(a.c_str());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError &e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitConfig;
    }

    if (gen->parsed()) {
      json t = json::object();
      if (gen_seed)
        t["seed"] = *gen_seed;
      if (gen_samples)
        t["num_samples"] = *gen_samples;
      if (gen_workers)
        t["workers"] = *gen_workers;
      if (gen_grid)
        t["grid"]["resolution"] = *gen_grid;
      if (gen_bs)
        t["views"]["num_bs"] = *gen_bs;
      if (gen_ue)
        t["views"]["num_ue"] = *gen_ue;
      if (gen_subcarriers)
        t["physics"]["num_subcarriers"] = *gen_subcarriers;
      if (gen_points)
        t["points"]["count"] = *gen_points;
      if (!gen_kind.empty())
        t["target"]["kind"] = gen_kind;
      if (!gen_idx_images.empty()) {
        t["target"]["digit_source"] = "idx";
        t["target"]["idx_images"] = gen_idx_images;
      }
      if (!gen_idx_labels.empty())
        t["target"]["idx_labels"] = gen_idx_labels;
      if (gen_link_snr)
        t["link"]["snr_db"] = number_or_inf(*gen_link_snr);
      if (gen_pilots)
        t["link"]["num_symbols"] = *gen_pilots;
      return cmd_gen_dataset(gen_flags, t, out, err);
    }

    if (rec->parsed()) {
      json t = json::object();
      if (!rec_dataset.empty())
        t["dataset"] = rec_dataset;
      if (!rec_method.empty())
        t["method"] = rec_method;
      if (rec_snr)
        t["snr_db"] = number_or_inf(*rec_snr);
      if (rec_pilots)
        t["pilots"] = *rec_pilots;
      if (rec_noiseless)
        t["noiseless"] = true;
      if (rec_stored)
        t["use_stored_ls"] = true;
      if (rec_radar)
        t["radar"] = true;
      if (!rec_views.empty()) {
        const auto v = parse_views(rec_views);
        t["views"] = {v.first, v.second};
      }
      if (!rec_split.empty())
        t["split"] = rec_split;
      if (rec_limit)
        t["limit"] = *rec_limit;
      if (rec_seed)
        t["seed"] = *rec_seed;
      if (rec_points)
        t["points"] = *rec_points;
      if (rec_workers)
        t["workers"] = *rec_workers;
      if (rec_cs_weight)
        t["bim"]["cs_weight"] = *rec_cs_weight;
      if (rec_cs_factor)
        t["bim"]["cs_weight_factor"] = *rec_cs_factor;
      if (rec_iters)
        t["bim"]["num_born_iters"] = *rec_iters;
      if (rec_inner)
        t["bim"]["max_iterations"] = *rec_inner;
      return cmd_reconstruct(rec_flags, t, out, err);
    }

    if (ev->parsed()) {
      EvalConfig cfg;
      for (const auto &r : eval_records)
        cfg.records.emplace_back(r);
      cfg.predictions = eval_pred;
      cfg.prediction_method = eval_method;
      cfg.dataset = eval_dataset;
      cfg.split = eval_split;
      if (!eval_views.empty())
        cfg.prediction_views = parse_views(eval_views);
      cfg.latents = eval_latents;
      cfg.validate();
      const auto dir = resolve_output(eval_flags.out, "eval");
      write_snapshot(dir, "eval", "", 0, {}, cfg.to_json());
      const auto summary = evaluate(cfg, dir, err);
      out << summary.dump(2) << '\n';
      return kExitOk;
    }

    if (insp->parsed()) {
      if (!insp_tensor.empty()) {
        const auto t = read_tensor(insp_tensor);
        out << json{{"dtype", dtype_name(t.dtype)}, {"dims", t.dims}}.dump() << '\n';
        return kExitOk;
      }
      if (insp_dataset.empty())
        throw InvalidArgument("inspect: pass --dataset or --tensor");
      const auto m = load_manifest(insp_dataset);
      if (insp_sample) {
        const auto s = load_sample(insp_dataset, m, *insp_sample);
        json j = s.meta;
        j["points"] = s.points.size();
        j["subcarriers"] = s.channels.num_subcarriers();
        j["antennas"] = s.channels.num_antennas();
        out << j.dump(2) << '\n';
      } else {
        out << manifest_to_json(m).dump(2) << '\n';
      }
      return kExitOk;
    }

    if (sim->parsed()) {
      PilotConfig pilot;
      pilot.num_symbols = sim_pilots;
      pilot.snr_db = sim_snr;
      pilot.seed = sim_seed;
      const auto m = load_manifest(sim_dataset);
      if (sim_radar)
        pilot.radar = SnrModel::for_physics(m.config.physics);
      pilot.validate();
      const auto views = sim_views.empty() ? std::pair{m.config.num_bs, m.config.num_ue} : parse_views(sim_views);
      const auto dir = resolve_output(sim_flags.out, "simulate");
      json resolved{{"dataset", sim_dataset}, {"sample", sim_sample}, {"snr_db", number_or_inf(sim_snr)},
                    {"pilots", sim_pilots},   {"radar", sim_radar},   {"views", {views.first, views.second}}};
      write_snapshot(dir, "simulate", "", sim_seed, {}, resolved);
      const auto s = load_sample(sim_dataset, m, sim_sample);
      const auto layout = s.layout.truncated(views.first, views.second);
      const auto exact = truncate_channels(s.channels, views.first, views.second);
      const auto est = estimate_channels(exact, pilot, static_cast<std::uint64_t>(sim_sample));
      write_channel_set(dir / "csi.bin", exact);
      write_channel_set(dir / "csi_ls.bin", est);
      std::vector<double> snr;
      double err_acc = 0.0, sig_acc = 0.0;
      for (int b = 0; b < views.first; ++b)
        for (int u = 0; u < views.second; ++u) {
          snr.push_back(linear_to_db(view_snr(pilot, layout.bs_positions[static_cast<std::size_t>(b)],
                                              layout.ue_positions[static_cast<std::size_t>(u)])));
          err_acc += (est.at(b, u).H - exact.at(b, u).H).squaredNorm();
          sig_acc += exact.at(b, u).H.squaredNorm();
        }
      write_f64(dir / "view_snr_db.bin",
                {static_cast<std::size_t>(views.first), static_cast<std::size_t>(views.second)}, snr);
      out << "simulate " << dir.string() << ": relative LS error " << std::sqrt(err_acc / sig_acc) << '\n';
      return kExitOk;
    }
  } catch (const InvalidArgument &e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitRun;
  }
  return kExitConfig;
}

} // namespace mvsense::cli
