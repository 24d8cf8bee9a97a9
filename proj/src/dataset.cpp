#include "mvsense/dataset.hpp"

#include "mvsense/parallel.hpp"
#include "mvsense/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>

namespace mvsense {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Reads an object while recording which keys were consumed so that typos
// surface as errors instead of silently falling back to defaults.
class ObjectReader {
public:
  ObjectReader(const json &j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object())
      throw InvalidArgument(where_ + ": expected an object");
  }

  template <typename T> void get(const char *key, T &out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end())
      return;
    try {
      out = it->template get<T>();
    } catch (const json::exception &e) {
      throw InvalidArgument(where_ + "." + key + ": " + e.what());
    }
  }

  void get_double(const char *key, double &out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end())
      return;
    out = json_to_double(*it, where_ + "." + key);
  }

  const json *child(const char *key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw InvalidArgument(where_ + ": unknown key '" + it.key() + "'");
  }

  static double json_to_double(const json &v, const std::string &where) {
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

private:
  const json &j_;
  std::string where_;
  std::set<std::string> seen_;
};

json double_to_json(double v) {
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  return v;
}

void read_em(ObjectReader &r, EmRanges &em) {
  r.get_double("eps_min", em.eps_min);
  r.get_double("eps_max", em.eps_max);
  r.get_double("sigma_min", em.sigma_min);
  r.get_double("sigma_max", em.sigma_max);
}

void write_em(json &j, const EmRanges &em) {
  j["eps_min"] = em.eps_min;
  j["eps_max"] = em.eps_max;
  j["sigma_min"] = em.sigma_min;
  j["sigma_max"] = em.sigma_max;
}

PilotConfig pilot_from_json(const json &j) {
  PilotConfig p;
  ObjectReader r(j, "link");
  r.get("num_symbols", p.num_symbols);
  r.get_double("snr_db", p.snr_db);
  r.get("seed", p.seed);
  bool radar = false;
  r.get("radar", radar);
  if (radar)
    p.radar = SnrModel{};
  std::string mod = "qpsk";
  r.get("modulation", mod);
  if (mod != "qpsk")
    throw InvalidArgument("link.modulation: only 'qpsk' is supported");
  r.finish();
  return p;
}

json pilot_to_json(const PilotConfig &p) {
  return json{{"num_symbols", p.num_symbols},
              {"snr_db", double_to_json(p.snr_db)},
              {"seed", p.seed},
              {"radar", p.radar.has_value()},
              {"modulation", "qpsk"}};
}

Vec2 origin_vec(const std::vector<double> &v, std::size_t i) { return {v[2 * i], v[2 * i + 1]}; }

std::string index_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

// Digit images are loaded once per build; generate_scene reloads them when
// called on its own.
struct DigitBank {
  std::vector<GrayImage> images;
  std::vector<int> labels;
};

DigitBank load_bank(const DatasetConfig &cfg) {
  DigitBank bank;
  bank.images = load_idx_images(cfg.idx_images);
  bank.labels = load_idx_labels(cfg.idx_labels, bank.images.size());
  if (bank.images.empty() || bank.labels.size() != bank.images.size())
    throw FormatError("IDX image and label files disagree or are empty");
  return bank;
}

GeneratedSample generate_scene_impl(const DatasetConfig &cfg, int index, const DigitBank *bank) {
  GeneratedSample s;
  s.index = index;
  const auto grid = cfg.grid();
  const auto idx = static_cast<std::uint64_t>(index);

  auto scene_rng = make_stream(cfg.seed, idx, Stream::Scene);
  if (cfg.target == TargetKind::Mnist) {
    GrayImage image;
    if (cfg.digits == DigitSource::Procedural) {
      s.label = uniform_int(scene_rng, 0, 9);
      image = procedural_digit(s.label, scene_rng);
    } else {
      const int pick = uniform_int(scene_rng, 0, static_cast<int>(bank->images.size()) - 1);
      image = bank->images[static_cast<std::size_t>(pick)];
      s.label = bank->labels[static_cast<std::size_t>(pick)];
    }
    const double eps = uniform(scene_rng, cfg.em.eps_min, cfg.em.eps_max);
    const double sig = uniform(scene_rng, cfg.em.sigma_min, cfg.em.sigma_max);
    s.scene = rasterize_binary_image(image, eps, sig, grid, cfg.em, cfg.raster);
  } else {
    s.scene = gen_multi_obj(scene_rng, grid, cfg.multi_obj);
  }

  auto clutter_rng = make_stream(cfg.seed, idx, Stream::Clutter);
  const int k = uniform_int(clutter_rng, cfg.clutter_min, cfg.clutter_max);
  s.scene.clutter = gen_clutter(clutter_rng, k, cfg.clutter);

  auto layout_rng = make_stream(cfg.seed, idx, Stream::Layout);
  s.layout = sample_view_layout(layout_rng, cfg.num_bs, cfg.num_ue, cfg.layout);

  auto point_rng = make_stream(cfg.seed, idx, Stream::Points);
  s.raw_points = sample_scene_points(s.scene, cfg.num_points, point_rng);
  return s;
}

void fill_channels(const DatasetConfig &cfg, GeneratedSample &s) {
  s.channels = multi_view_channels(s.scene, s.layout, cfg.physics);
  if (cfg.link) {
    PilotConfig pilot = *cfg.link;
    if (pilot.radar)
      pilot.radar = SnrModel::for_physics(cfg.physics);
    // Pilot streams are keyed by the manifest seed so two datasets with
    // different seeds never share noise.
    pilot.seed ^= cfg.seed * 0x9E3779B97F4A7C15ULL;
    s.channels_ls = estimate_channels(s.channels, pilot, static_cast<std::uint64_t>(s.index));
  }
}

json sample_meta(const DatasetConfig &cfg, const GeneratedSample &s, const char *split) {
  json m;
  m["index"] = s.index;
  m["split"] = split;
  m["target"] = cfg.target == TargetKind::Mnist ? "mnist" : "multi-obj";
  m["label"] = s.label;
  m["num_bs"] = s.layout.num_bs();
  m["num_ue"] = s.layout.num_ue();
  m["num_clutter"] = s.scene.clutter.size();
  m["foreground_pixels"] = s.scene.foreground_count();
  double eps_max = 1.0, sig_max = 0.0;
  for (std::size_t i = 0; i < s.scene.eps_r.size(); ++i) {
    eps_max = std::max(eps_max, s.scene.eps_r[i]);
    sig_max = std::max(sig_max, s.scene.sigma[i]);
  }
  m["eps_r_max"] = eps_max;
  m["sigma_max"] = sig_max;
  m["has_ls"] = s.channels_ls.has_value();
  return m;
}

void write_json(const fs::path &path, const json &j) {
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw FormatError("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
  if (!f)
    throw FormatError("write failed for " + path.string());
}

json read_json(const fs::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw FormatError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_sample(const fs::path &dir, const DatasetConfig &cfg, const GeneratedSample &s,
                  const NormStats &stats, const char *split) {
  fs::create_directories(dir);
  write_channel_set(dir / "csi.bin", s.channels);
  if (s.channels_ls)
    write_channel_set(dir / "csi_ls.bin", *s.channels_ls);

  std::vector<double> pos;
  for (const auto &p : s.layout.bs_positions)
    pos.insert(pos.end(), {p.x, p.y});
  write_f64(dir / "bs_pos.bin", {s.layout.bs_positions.size(), 2}, pos);
  pos.clear();
  for (const auto &p : s.layout.ue_positions)
    pos.insert(pos.end(), {p.x, p.y});
  write_f64(dir / "ue_pos.bin", {s.layout.ue_positions.size(), 2}, pos);

  write_point_cloud(dir / "points.bin", stats.normalize(s.raw_points));

  const auto res = static_cast<std::size_t>(s.scene.grid.resolution());
  write_f64(dir / "eps_r.bin", {res, res}, s.scene.eps_r);
  write_f64(dir / "sigma.bin", {res, res}, s.scene.sigma);

  std::vector<double> cl;
  for (const auto &c : s.scene.clutter)
    cl.insert(cl.end(), {c.center.x, c.center.y, c.diameter, c.eps_r, c.sigma});
  write_f64(dir / "clutter.bin", {s.scene.clutter.size(), 5}, cl);

  write_json(dir / "meta.json", sample_meta(cfg, s, split));
}

template <typename Fn> auto with_index(int index, Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DatasetError &) {
    throw;
  } catch (const std::exception &e) {
    throw DatasetError("sample " + std::to_string(index) + ": " + e.what(), index);
  }
}

} // namespace

void DatasetConfig::validate() const {
  if (num_samples < 1)
    throw InvalidArgument("num_samples must be >= 1");
  if (split_ratio[0] < 0 || split_ratio[1] < 0 || split_ratio[2] < 0 ||
      split_ratio[0] + split_ratio[1] + split_ratio[2] <= 0)
    throw InvalidArgument("split_ratio must be non-negative with a positive sum");
  if (const auto sp = make_splits(num_samples, split_ratio); sp.train_end - sp.train_begin < 2)
    throw InvalidArgument("the training split needs at least 2 samples for normalization statistics");
  physics.validate();
  if (!(roi_side > 0.0) || grid_resolution < 1)
    throw InvalidArgument("grid: roi_side must be positive and resolution >= 1");
  if (num_bs < 1 || num_ue < 1 || num_bs > layout.max_bs || num_ue > layout.max_ue)
    throw InvalidArgument("views: need 1 <= num_bs <= " + std::to_string(layout.max_bs) +
                          " and 1 <= num_ue <= " + std::to_string(layout.max_ue));
  em.validate();
  multi_obj.em.validate();
  clutter.em.validate();
  if (clutter_min < 0 || clutter_max < clutter_min)
    throw InvalidArgument("clutter: need 0 <= min_count <= max_count");
  if (num_points < 1)
    throw InvalidArgument("points.count must be >= 1");
  if (!(min_std > 0.0))
    throw InvalidArgument("points.min_std must be positive");
  if (target == TargetKind::Mnist && digits == DigitSource::Idx &&
      (idx_images.empty() || idx_labels.empty()))
    throw InvalidArgument("target: digit_source 'idx' needs idx_images and idx_labels");
  if (link)
    link->validate();
}

DatasetConfig DatasetConfig::from_json(const json &j) {
  DatasetConfig c;
  ObjectReader r(j, "config");
  r.get("seed", c.seed);
  r.get("num_samples", c.num_samples);
  r.get("split_ratio", c.split_ratio);
  r.get("workers", c.workers);
  if (auto *p = r.child("physics")) {
    ObjectReader pr(*p, "physics");
    pr.get_double("center_frequency", c.physics.center_frequency);
    pr.get_double("subcarrier_spacing", c.physics.subcarrier_spacing);
    pr.get("num_subcarriers", c.physics.num_subcarriers);
    pr.finish();
  }
  if (auto *g = r.child("grid")) {
    ObjectReader gr(*g, "grid");
    gr.get_double("roi_side", c.roi_side);
    gr.get("resolution", c.grid_resolution);
    gr.finish();
  }
  if (auto *v = r.child("views")) {
    ObjectReader vr(*v, "views");
    vr.get("num_bs", c.num_bs);
    vr.get("num_ue", c.num_ue);
    vr.get_double("bs_radius_min", c.layout.bs_radius_min);
    vr.get_double("bs_radius_max", c.layout.bs_radius_max);
    vr.get_double("ue_radius_min", c.layout.ue_radius_min);
    vr.get_double("ue_radius_max", c.layout.ue_radius_max);
    vr.get("max_bs", c.layout.max_bs);
    vr.get("max_ue", c.layout.max_ue);
    vr.get("bs_array_antennas", c.layout.bs_array_antennas);
    vr.get_double("element_spacing", c.layout.element_spacing);
    vr.finish();
  }
  if (auto *t = r.child("target")) {
    ObjectReader tr(*t, "target");
    std::string kind = "mnist", source = "procedural", images, labels;
    tr.get("kind", kind);
    if (kind == "mnist")
      c.target = TargetKind::Mnist;
    else if (kind == "multi-obj")
      c.target = TargetKind::MultiObj;
    else
      throw InvalidArgument("target.kind must be 'mnist' or 'multi-obj', got '" + kind + "'");
    read_em(tr, c.em);
    tr.get("digit_source", source);
    if (source == "procedural")
      c.digits = DigitSource::Procedural;
    else if (source == "idx")
      c.digits = DigitSource::Idx;
    else
      throw InvalidArgument("target.digit_source must be 'procedural' or 'idx'");
    tr.get("idx_images", images);
    tr.get("idx_labels", labels);
    c.idx_images = images;
    c.idx_labels = labels;
    tr.get_double("threshold", c.raster.threshold);
    tr.get_double("fill_fraction", c.raster.fill_fraction);
    tr.get("min_objects", c.multi_obj.min_objects);
    tr.get("max_objects", c.multi_obj.max_objects);
    tr.get_double("min_size", c.multi_obj.min_size);
    tr.get_double("max_size", c.multi_obj.max_size);
    tr.get("max_retries", c.multi_obj.max_retries);
    tr.finish();
  }
  c.multi_obj.em = c.em;
  if (auto *cl = r.child("clutter")) {
    ObjectReader cr(*cl, "clutter");
    cr.get("min_count", c.clutter_min);
    cr.get("max_count", c.clutter_max);
    cr.get_double("diameter", c.clutter.diameter);
    cr.get_double("band_min", c.clutter.band_min);
    cr.get_double("band_max", c.clutter.band_max);
    read_em(cr, c.clutter.em);
    cr.finish();
  }
  if (auto *p = r.child("points")) {
    ObjectReader pr(*p, "points");
    pr.get("count", c.num_points);
    pr.get_double("min_std", c.min_std);
    pr.finish();
  }
  if (auto *l = r.child("link"); l && !l->is_null())
    c.link = pilot_from_json(*l);
  r.finish();
  return c;
}

json DatasetConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["num_samples"] = num_samples;
  j["split_ratio"] = split_ratio;
  j["workers"] = workers;
  j["physics"] = {{"center_frequency", physics.center_frequency},
                  {"subcarrier_spacing", physics.subcarrier_spacing},
                  {"num_subcarriers", physics.num_subcarriers}};
  j["grid"] = {{"roi_side", roi_side}, {"resolution", grid_resolution}};
  j["views"] = {{"num_bs", num_bs},
                {"num_ue", num_ue},
                {"bs_radius_min", layout.bs_radius_min},
                {"bs_radius_max", layout.bs_radius_max},
                {"ue_radius_min", layout.ue_radius_min},
                {"ue_radius_max", layout.ue_radius_max},
                {"max_bs", layout.max_bs},
                {"max_ue", layout.max_ue},
                {"bs_array_antennas", layout.bs_array_antennas},
                {"element_spacing", layout.element_spacing}};
  json t;
  t["kind"] = target == TargetKind::Mnist ? "mnist" : "multi-obj";
  write_em(t, em);
  t["digit_source"] = digits == DigitSource::Procedural ? "procedural" : "idx";
  t["idx_images"] = idx_images.string();
  t["idx_labels"] = idx_labels.string();
  t["threshold"] = raster.threshold;
  t["fill_fraction"] = raster.fill_fraction;
  t["min_objects"] = multi_obj.min_objects;
  t["max_objects"] = multi_obj.max_objects;
  t["min_size"] = multi_obj.min_size;
  t["max_size"] = multi_obj.max_size;
  t["max_retries"] = multi_obj.max_retries;
  j["target"] = t;
  json cl;
  cl["min_count"] = clutter_min;
  cl["max_count"] = clutter_max;
  cl["diameter"] = clutter.diameter;
  cl["band_min"] = clutter.band_min;
  cl["band_max"] = clutter.band_max;
  write_em(cl, clutter.em);
  j["clutter"] = cl;
  j["points"] = {{"count", num_points}, {"min_std", min_std}};
  j["link"] = link ? pilot_to_json(*link) : json(nullptr);
  return j;
}

const char *SplitRanges::split_of(int index) const {
  if (index >= train_begin && index < train_end)
    return "train";
  if (index >= val_begin && index < val_end)
    return "val";
  if (index >= test_begin && index < test_end)
    return "test";
  throw InvalidArgument("sample index " + std::to_string(index) + " outside the dataset");
}

std::pair<int, int> SplitRanges::range(const std::string &split) const {
  if (split == "train")
    return {train_begin, train_end};
  if (split == "val")
    return {val_begin, val_end};
  if (split == "test")
    return {test_begin, test_end};
  if (split == "all")
    return {train_begin, test_end};
  throw InvalidArgument("unknown split '" + split + "' (train, val, test or all)");
}

SplitRanges make_splits(int num_samples, const std::array<int, 3> &ratio) {
  const long total = static_cast<long>(ratio[0]) + ratio[1] + ratio[2];
  if (num_samples < 0 || total <= 0)
    throw InvalidArgument("make_splits: invalid sample count or ratio");
  SplitRanges s;
  const int n_train = static_cast<int>(static_cast<long>(num_samples) * ratio[0] / total);
  const int n_val = static_cast<int>(static_cast<long>(num_samples) * ratio[1] / total);
  s.train_end = n_train;
  s.val_begin = n_train;
  s.val_end = n_train + n_val;
  s.test_begin = s.val_end;
  s.test_end = num_samples;
  return s;
}

json manifest_to_json(const DatasetManifest &m) {
  json j;
  j["format_version"] = m.format_version;
  j["config"] = m.config.to_json();
  j["norm_stats"] = {{"mean", m.norm_stats.mean}, {"std", m.norm_stats.std}, {"inflated", m.inflated}};
  j["splits"] = {{"train", {m.splits.train_begin, m.splits.train_end}},
                 {"val", {m.splits.val_begin, m.splits.val_end}},
                 {"test", {m.splits.test_begin, m.splits.test_end}}};
  j["tensors"] = {{"csi", "complex128 [B*U, N_r, N_c], view index b*U + u"},
                  {"csi_ls", "complex128 [B*U, N_r, N_c], LS estimates (optional)"},
                  {"bs_pos", "float64 [B, 2]"},
                  {"ue_pos", "float64 [U, 2]"},
                  {"points", "float64 [M, 4] normalized (x, y, eps_r, sigma)"},
                  {"eps_r", "float64 [res, res]"},
                  {"sigma", "float64 [res, res]"},
                  {"clutter", "float64 [K, 5] (x, y, diameter, eps_r, sigma)"}};
  return j;
}

DatasetManifest manifest_from_json(const json &j) {
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kDatasetFormatVersion)
      throw FormatError("unsupported dataset format_version " + std::to_string(m.format_version));
    m.config = DatasetConfig::from_json(j.at("config"));
    const auto &ns = j.at("norm_stats");
    m.norm_stats.mean = ns.at("mean").get<Point4>();
    m.norm_stats.std = ns.at("std").get<Point4>();
    m.inflated = ns.at("inflated").get<std::array<bool, 4>>();
    const auto &sp = j.at("splits");
    auto rd = [&](const char *k, int &b, int &e) {
      const auto v = sp.at(k).get<std::array<int, 2>>();
      b = v[0];
      e = v[1];
    };
    rd("train", m.splits.train_begin, m.splits.train_end);
    rd("val", m.splits.val_begin, m.splits.val_end);
    rd("test", m.splits.test_begin, m.splits.test_end);
  } catch (const json::exception &e) {
    throw FormatError(std::string("manifest: ") + e.what());
  } catch (const InvalidArgument &e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

GeneratedSample generate_scene(const DatasetConfig &cfg, int index) {
  cfg.validate();
  std::optional<DigitBank> bank;
  if (cfg.target == TargetKind::Mnist && cfg.digits == DigitSource::Idx)
    bank = load_bank(cfg);
  return with_index(index, [&] { return generate_scene_impl(cfg, index, bank ? &*bank : nullptr); });
}

GeneratedSample generate_sample(const DatasetConfig &cfg, int index) {
  auto s = generate_scene(cfg, index);
  with_index(index, [&] { fill_channels(cfg, s); });
  return s;
}

DatasetManifest build_dataset(const DatasetConfig &cfg, const fs::path &out_dir) {
  cfg.validate();
  std::optional<DigitBank> bank;
  if (cfg.target == TargetKind::Mnist && cfg.digits == DigitSource::Idx)
    bank = load_bank(cfg);
  const DigitBank *bank_ptr = bank ? &*bank : nullptr;

  DatasetManifest m;
  m.config = cfg;
  m.splits = make_splits(cfg.num_samples, cfg.split_ratio);

  // Pass 1: raw training clouds for the normalization statistics.
  const int n_train = m.splits.train_end - m.splits.train_begin;
  std::vector<PointCloud> train(static_cast<std::size_t>(n_train));
  parallel_for(n_train, cfg.workers, [&](int i) {
    const int index = m.splits.train_begin + i;
    train[static_cast<std::size_t>(i)] =
        with_index(index, [&] { return generate_scene_impl(cfg, index, bank_ptr).raw_points; });
  });
  if (n_train > 0) {
    const auto ns = compute_norm_stats(train, cfg.min_std);
    m.norm_stats = ns.stats;
    m.inflated = ns.inflated;
  }
  train.clear();

  // Pass 2: full samples. Each sample owns its directory; the manifest is
  // written last so a complete manifest implies complete samples.
  fs::create_directories(out_dir / "samples");
  std::mutex write_mu;
  parallel_for(cfg.num_samples, cfg.workers, [&](int index) {
    auto s = with_index(index, [&] {
      auto g = generate_scene_impl(cfg, index, bank_ptr);
      fill_channels(cfg, g);
      return g;
    });
    std::lock_guard lock(write_mu);
    with_index(index, [&] {
      write_sample(sample_dir(out_dir, index), cfg, s, m.norm_stats, m.splits.split_of(index));
    });
  });

  write_json(out_dir / "manifest.json", manifest_to_json(m));
  return m;
}

DatasetManifest load_manifest(const fs::path &dataset_dir) {
  return manifest_from_json(read_json(dataset_dir / "manifest.json"));
}

fs::path sample_dir(const fs::path &dataset_dir, int index) {
  return dataset_dir / "samples" / index_name(index);
}

LoadedSample load_sample(const fs::path &dataset_dir, const DatasetManifest &m, int index) {
  if (index < 0 || index >= m.config.num_samples)
    throw DatasetError("sample index " + std::to_string(index) + " outside the dataset", index);
  return with_index(index, [&] {
    const auto dir = sample_dir(dataset_dir, index);
    LoadedSample s;
    s.index = index;
    s.split = m.splits.split_of(index);
    s.meta = read_json(dir / "meta.json");

    const auto bs = tensor_as_f64(read_tensor(dir / "bs_pos.bin"));
    const auto ue = tensor_as_f64(read_tensor(dir / "ue_pos.bin"));
    for (std::size_t i = 0; 2 * i < bs.size(); ++i)
      s.layout.bs_positions.push_back(origin_vec(bs, i));
    for (std::size_t i = 0; 2 * i < ue.size(); ++i)
      s.layout.ue_positions.push_back(origin_vec(ue, i));
    s.layout.bs_array_antennas = m.config.layout.bs_array_antennas;
    s.layout.element_spacing = m.config.layout.element_spacing;
    s.layout.validate();

    s.channels = read_channel_set(dir / "csi.bin", s.layout);
    if (fs::exists(dir / "csi_ls.bin"))
      s.channels_ls = read_channel_set(dir / "csi_ls.bin", s.layout);
    s.points = read_point_cloud(dir / "points.bin");

    const auto grid = m.config.grid();
    s.scene = TargetScene::empty(grid);
    const auto eps_t = read_tensor(dir / "eps_r.bin");
    const auto sig_t = read_tensor(dir / "sigma.bin");
    s.scene.eps_r = tensor_as_f64(eps_t);
    s.scene.sigma = tensor_as_f64(sig_t);
    const auto cl = tensor_as_f64(read_tensor(dir / "clutter.bin"));
    for (std::size_t i = 0; 5 * i < cl.size(); ++i)
      s.scene.clutter.push_back({{cl[5 * i], cl[5 * i + 1]}, cl[5 * i + 2], cl[5 * i + 3], cl[5 * i + 4]});
    s.scene.validate();
    return s;
  });
}

void write_channel_set(const fs::path &path, const ChannelSet &set) {
  const auto nr = static_cast<std::size_t>(set.num_antennas());
  const auto nc = static_cast<std::size_t>(set.num_subcarriers());
  std::vector<cdouble> data;
  data.reserve(set.entries.size() * nr * nc);
  for (const auto &e : set.entries)
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t n = 0; n < nc; ++n)
        data.push_back(e.H(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n)));
  write_c128(path, {set.entries.size(), nr, nc}, data);
}

ChannelSet read_channel_set(const fs::path &path, const ViewLayout &layout) {
  const auto t = read_tensor(path);
  const auto data = tensor_as_c128(t);
  const auto views = static_cast<std::size_t>(layout.num_bs() * layout.num_ue());
  if (t.dims.size() != 3 || t.dims[0] != views ||
      t.dims[1] != static_cast<std::size_t>(layout.bs_array_antennas))
    throw FormatError(path.string() + ": CSI tensor shape does not match the layout");
  const auto nr = t.dims[1], nc = t.dims[2];
  ChannelSet set;
  set.num_bs = layout.num_bs();
  set.num_ue = layout.num_ue();
  std::size_t k = 0;
  for (int b = 0; b < set.num_bs; ++b)
    for (int u = 0; u < set.num_ue; ++u) {
      ChannelEntry e;
      e.bs_index = b;
      e.ue_index = u;
      e.bs_position = layout.bs_positions[static_cast<std::size_t>(b)];
      e.ue_position = layout.ue_positions[static_cast<std::size_t>(u)];
      e.H.resize(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
      for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t n = 0; n < nc; ++n)
          e.H(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n)) = data[k++];
      set.entries.push_back(std::move(e));
    }
  return set;
}

void write_json_file(const fs::path &path, const json &j) { write_json(path, j); }

json read_json_file(const fs::path &path) { return read_json(path); }

void write_point_cloud(const fs::path &path, const PointCloud &cloud) {
  std::vector<double> data;
  data.reserve(cloud.size() * 4);
  for (const auto &p : cloud.points)
    data.insert(data.end(), p.begin(), p.end());
  write_f64(path, {cloud.size(), 4}, data);
}

PointCloud read_point_cloud(const fs::path &path) {
  const auto t = read_tensor(path);
  if (t.dims.size() != 2 || t.dims[1] != 4)
    throw FormatError(path.string() + ": expected a point-cloud tensor of shape [M, 4]");
  const auto data = tensor_as_f64(t);
  PointCloud c;
  c.points.resize(t.dims[0]);
  for (std::size_t i = 0; i < t.dims[0]; ++i)
    for (std::size_t d = 0; d < 4; ++d)
      c.points[i][d] = data[4 * i + d];
  return c;
}

} // namespace mvsense
