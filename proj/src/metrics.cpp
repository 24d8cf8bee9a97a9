#include "mvsense/metrics.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

namespace mvsense {

KMeansResult kmeans2(std::span<const double> values) {
  KMeansResult res;
  res.mask.assign(values.size(), false);
  if (values.empty()) {
    res.degenerate = true;
    return res;
  }
  for (double v : values)
    if (!std::isfinite(v))
      throw InvalidArgument("kmeans2: non-finite input");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  res.low_centroid = lo;
  res.high_centroid = hi;
  if (lo == hi) {
    res.degenerate = true;
    return res;
  }
  for (int it = 1; it <= 1000; ++it) {
    double sum_lo = 0.0, sum_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    bool changed = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const bool high = std::abs(values[i] - hi) < std::abs(values[i] - lo);
      changed = changed || high != res.mask[i];
      res.mask[i] = high;
      (high ? sum_hi : sum_lo) += values[i];
      ++(high ? n_hi : n_lo);
    }
    res.iterations = it;
    // Both clusters stay nonempty: the extremes are always nearest their own
    // initial centroid and centroids stay between them.
    lo = sum_lo / static_cast<double>(n_lo);
    hi = sum_hi / static_cast<double>(n_hi);
    if (!changed && it > 1)
      break;
  }
  res.low_centroid = lo;
  res.high_centroid = hi;
  return res;
}

std::vector<double> contrast_magnitude(const TargetScene &scene, const PhysicsConfig &cfg) {
  const double w = 2.0 * kPi * cfg.center_frequency * cfg.vacuum_permittivity;
  std::vector<double> out(scene.eps_r.size());
  for (std::size_t m = 0; m < out.size(); ++m)
    out[m] = std::hypot(scene.eps_r[m] - 1.0, scene.sigma[m] / w);
  return out;
}

namespace {

double sq_dist(const Point4 &a, const Point4 &b) {
  const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2], d3 = a[3] - b[3];
  return d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3;
}

class KdTree {
public:
  explicit KdTree(const std::vector<Point4> &pts) : pts_(pts), idx_(pts.size()) {
    std::iota(idx_.begin(), idx_.end(), std::size_t{0});
    nodes_.reserve(2 * pts.size() / kLeaf + 2);
    build(0, idx_.size());
  }

  double nearest_sq(const Point4 &q) const {
    double best = std::numeric_limits<double>::infinity();
    search(0, q, best);
    return best;
  }

private:
  static constexpr std::size_t kLeaf = 8;
  struct Node {
    std::size_t begin, end;
    int dim = -1; // -1 for a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= kLeaf)
      return id;
    int dim = 0;
    double spread = -1.0;
    for (int k = 0; k < 4; ++k) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = begin; i < end; ++i) {
        lo = std::min(lo, pts_[idx_[i]][k]);
        hi = std::max(hi, pts_[idx_[i]][k]);
      }
      if (hi - lo > spread)
        spread = hi - lo, dim = k;
    }
    if (spread <= 0.0)
      return id; // all points coincide
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(idx_.begin() + static_cast<std::ptrdiff_t>(begin), idx_.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return pts_[a][dim] < pts_[b][dim]; });
    const double split = pts_[idx_[mid]][dim];
    // Left holds values <= split is not guaranteed by nth_element for equal
    // keys; bounds below only rely on left <= split <= right.
    const std::size_t l = build(begin, mid);
    const std::size_t r = build(mid, end);
    nodes_[id].dim = dim;
    nodes_[id].split = split;
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void search(std::size_t id, const Point4 &q, double &best) const {
    const Node &n = nodes_[id];
    if (n.dim < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i)
        best = std::min(best, sq_dist(q, pts_[idx_[i]]));
      return;
    }
    const double diff = q[n.dim] - n.split;
    const std::size_t near = diff <= 0.0 ? n.left : n.right;
    const std::size_t far = diff <= 0.0 ? n.right : n.left;
    search(near, q, best);
    // Every point on the far side is at least |diff| away along this axis,
    // and a floating-point sum of squares never drops below one of its terms.
    if (diff * diff <= best)
      search(far, q, best);
  }

  const std::vector<Point4> &pts_;
  std::vector<std::size_t> idx_;
  std::vector<Node> nodes_;
};

double directed(const PointCloud &from, const PointCloud &to) {
  const KdTree tree(to.points);
  double sum = 0.0;
  for (const auto &p : from.points)
    sum += tree.nearest_sq(p);
  return sum / static_cast<double>(from.size());
}

} // namespace

double chamfer(const PointCloud &a, const PointCloud &b) {
  if (a.empty() || b.empty())
    throw InvalidArgument("chamfer: point clouds must be nonempty");
  return directed(a, b) + directed(b, a);
}

double log_cd(double cd) {
  if (std::isnan(cd) || cd < 0.0)
    throw InvalidArgument("log_cd: distance must be >= 0");
  if (cd == 0.0)
    return kZeroCdSentinel;
  return 10.0 * std::log10(cd);
}

ReconstructionCloud reconstruction_cloud(const TargetScene &recon, const PhysicsConfig &cfg, int count, Rng &rng) {
  ReconstructionCloud out;
  const auto mag = contrast_magnitude(recon, cfg);
  out.kmeans = kmeans2(mag);
  std::vector<bool> mask = out.kmeans.mask;
  if (out.kmeans.degenerate)
    mask.assign(mask.size(), true);
  out.raw = sample_masked_points(recon, mask, count, rng);
  return out;
}

namespace {

std::string format_double(double v) {
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  if (std::isnan(v))
    return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string &s) {
  if (s == "inf")
    return std::numeric_limits<double>::infinity();
  if (s == "-inf")
    return -std::numeric_limits<double>::infinity();
  if (s == "nan")
    return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size())
    throw FormatError("bad number '" + s + "'");
  return v;
}

const char *kCsvHeader = "sample_id,method,log_cd_db,zero_cd,runtime_s,num_bs,num_ue,snr_db";

} // namespace

void write_records_csv(const std::filesystem::path &path, const std::vector<EvalRecord> &records) {
  std::ofstream f(path);
  if (!f)
    throw FormatError("cannot open " + path.string() + " for writing");
  f << kCsvHeader << '\n';
  for (const auto &r : records) {
    if (r.sample_id.find_first_of(",\n") != std::string::npos || r.method.find_first_of(",\n") != std::string::npos)
      throw InvalidArgument("write_records_csv: identifiers must not contain commas or newlines");
    f << r.sample_id << ',' << r.method << ',' << format_double(r.log_cd) << ',' << (r.zero_cd ? 1 : 0) << ','
      << format_double(r.runtime_s) << ',' << r.num_bs << ',' << r.num_ue << ',' << format_double(r.snr_db) << '\n';
  }
  if (!f)
    throw FormatError("write failed for " + path.string());
}

std::vector<EvalRecord> read_records_csv(const std::filesystem::path &path) {
  std::ifstream f(path);
  if (!f)
    throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kCsvHeader)
    throw FormatError(path.string() + ": missing records header");
  std::vector<EvalRecord> out;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    if (cells.size() != 8)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 8 fields");
    try {
      EvalRecord r;
      r.sample_id = cells[0];
      r.method = cells[1];
      r.log_cd = parse_double(cells[2]);
      r.zero_cd = cells[3] == "1";
      r.runtime_s = parse_double(cells[4]);
      r.num_bs = std::stoi(cells[5]);
      r.num_ue = std::stoi(cells[6]);
      r.snr_db = parse_double(cells[7]);
      out.push_back(std::move(r));
    } catch (const std::logic_error &e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty())
    return std::numeric_limits<double>::quiet_NaN();
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size())
    return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

std::vector<MethodSummary> aggregate(const std::vector<EvalRecord> &records) {
  if (records.empty())
    throw InvalidArgument("aggregate: no records");
  std::map<std::string, std::vector<const EvalRecord *>> groups;
  for (const auto &r : records)
    groups[r.method].push_back(&r);

  std::vector<MethodSummary> out;
  for (const auto &[method, rs] : groups) {
    MethodSummary s;
    s.method = method;
    s.count = rs.size();
    std::vector<double> all, finite;
    double lin = 0.0;
    for (const auto *r : rs) {
      const double v = r->zero_cd ? kZeroCdSentinel : r->log_cd;
      all.push_back(v);
      if (r->zero_cd)
        ++s.zero_cd_count;
      else
        finite.push_back(v), lin += std::pow(10.0, v / 10.0);
    }
    std::sort(all.begin(), all.end());
    std::sort(finite.begin(), finite.end());
    s.mean_db = finite.empty() ? kZeroCdSentinel
                               : std::accumulate(finite.begin(), finite.end(), 0.0) / static_cast<double>(finite.size());
    s.mean_linear_db = log_cd(lin / static_cast<double>(s.count));
    s.median_db = quantile_sorted(all, 0.5);
    s.q1_db = quantile_sorted(all, 0.25);
    s.q3_db = quantile_sorted(all, 0.75);
    for (std::size_t i = 0; i < all.size(); ++i)
      s.cdf.push_back({all[i], static_cast<double>(i + 1) / static_cast<double>(all.size())});
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ViewGridCell> view_grid(const std::vector<EvalRecord> &records,
                                    const std::vector<std::pair<int, int>> &configs) {
  std::vector<std::string> methods;
  for (const auto &r : records)
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
  std::sort(methods.begin(), methods.end());
  std::vector<ViewGridCell> out;
  for (const auto &m : methods)
    for (const auto &[b, u] : configs) {
      ViewGridCell c;
      c.method = m;
      c.num_bs = b;
      c.num_ue = u;
      double sum = 0.0;
      std::size_t finite = 0;
      for (const auto &r : records)
        if (r.method == m && r.num_bs == b && r.num_ue == u) {
          ++c.count;
          if (!r.zero_cd)
            sum += r.log_cd, ++finite;
        }
      if (finite > 0)
        c.mean_db = sum / static_cast<double>(finite);
      else if (c.count > 0)
        c.mean_db = kZeroCdSentinel;
      out.push_back(c);
    }
  return out;
}

void write_cdf_csv(const std::filesystem::path &path, const std::vector<MethodSummary> &summaries) {
  std::ofstream f(path);
  if (!f)
    throw FormatError("cannot open " + path.string() + " for writing");
  f << "method,log_cd_db,cdf\n";
  for (const auto &s : summaries)
    for (const auto &p : s.cdf)
      f << s.method << ',' << format_double(p.value) << ',' << format_double(p.probability) << '\n';
}

void write_summary_json(const std::filesystem::path &path, const std::vector<MethodSummary> &summaries,
                        const std::vector<ViewGridCell> &grid) {
  using nlohmann::json;
  auto num = [](double v) -> json {
    if (std::isfinite(v))
      return v;
    return format_double(v);
  };
  json j;
  j["methods"] = json::array();
  for (const auto &s : summaries)
    j["methods"].push_back({{"method", s.method},
                            {"count", s.count},
                            {"zero_cd_count", s.zero_cd_count},
                            {"mean_log_cd_db", num(s.mean_db)},
                            {"mean_linear_cd_db", num(s.mean_linear_db)},
                            {"median_log_cd_db", num(s.median_db)},
                            {"q1_log_cd_db", num(s.q1_db)},
                            {"q3_log_cd_db", num(s.q3_db)}});
  j["view_grid"] = json::array();
  for (const auto &c : grid)
    j["view_grid"].push_back(
        {{"method", c.method}, {"num_bs", c.num_bs}, {"num_ue", c.num_ue}, {"count", c.count}, {"mean_log_cd_db", num(c.mean_db)}});
  std::ofstream f(path);
  if (!f)
    throw FormatError("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
}

} // namespace mvsense
