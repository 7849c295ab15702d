#pragma once

// File formats: CSV tables, flat key-value configuration, the binary posterior
// sample file and JSON serialization of summaries and ground truth.
//
// samples.bin layout (all integers little-endian):
//   "MFMP"  magic, 4 bytes
//   u8      format version (1)
//   record  header: u32 n, u32 p, u64 seed, u32 draw count
//   record  one per draw: u32 iteration, u32 K, n x u32 labels,
//           K x (p (p - 1) / 2) x u8 upper-triangle adjacency (row-major)
// Every record is framed by a leading u32 byte length of its payload.

#include "mfmpgm/gibbs.hpp"
#include "mfmpgm/simgen.hpp"
#include "mfmpgm/summary.hpp"
#include "mfmpgm/types.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef MFMPGM_VERSION
#define MFMPGM_VERSION "0.1.0"
#endif

namespace mfmpgm {

inline constexpr const char* kVersion = MFMPGM_VERSION;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(s);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": '" + s + "' is not a number");
  }
}

inline long long parse_integer(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": '" + s + "' is not an integer");
  }
}

inline std::uint64_t parse_seed(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": '" + s + "' is not an unsigned integer");
  }
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  for (int prec = 1; prec <= 17; ++prec) {
    std::ostringstream trial;
    trial << std::setprecision(prec) << v;
    if (std::stod(trial.str()) == v) return trial.str();
  }
  return out.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(t.header.size()) + " fields, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw std::runtime_error(path + ": empty file");
  return t;
}

/// Ordinal CSV with a header row. Level counts are the column maxima unless
/// `levels` > 0, in which case every column gets that many levels.
inline OrdinalDataset read_ordinal_csv(const std::string& path, int levels = 0) {
  const auto t = read_csv(path);
  OrdinalDataset d;
  d.variable_names = t.header;
  const int n = static_cast<int>(t.rows.size());
  const int p = static_cast<int>(t.header.size());
  if (n == 0) throw std::runtime_error(path + ": no data rows");
  d.values.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      d.values(i, j) = static_cast<int>(
          detail::parse_integer(t.rows[i][j], path + " row " + std::to_string(i + 1) + " column " + t.header[j]));
  d.level_counts.assign(p, levels);
  if (levels <= 0)
    for (int j = 0; j < p; ++j) d.level_counts[j] = std::max(2, d.values.col(j).maxCoeff());
  const auto v = validate_dataset(d);
  if (!v.empty()) throw std::runtime_error(path + ": " + v.front().message);
  return d;
}

inline void write_ordinal_csv(const std::string& path, const OrdinalDataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int j = 0; j < d.cols(); ++j) out << (j ? "," : "") << d.name(j);
  out << "\n";
  for (int i = 0; i < d.rows(); ++i) {
    for (int j = 0; j < d.cols(); ++j) out << (j ? "," : "") << d.values(i, j);
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Tertile (quantile) discretization
// ---------------------------------------------------------------------------

struct DiscretizedColumn {
  std::vector<int> levels;
  std::vector<double> cuts;
  bool usable = true;  // false when every value falls in one level
};

/// Cut k = order statistic at position ceil(k N / L) (1-based) of the sorted
/// column; a value equal to a cut goes to the lower level.
inline DiscretizedColumn discretize_column(const std::vector<double>& x, int levels) {
  if (levels < 2) throw std::invalid_argument("discretize: need at least 2 levels");
  if (x.empty()) throw std::invalid_argument("discretize: empty column");
  const std::size_t n = x.size();
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  DiscretizedColumn out;
  for (int k = 1; k < levels; ++k) {
    // Integer ceil(k n / L) avoids rounding in the division.
    const std::size_t pos = (static_cast<std::size_t>(k) * n + levels - 1) / levels;
    out.cuts.push_back(sorted[std::max<std::size_t>(pos, 1) - 1]);
  }
  std::set<int> seen;
  for (double v : x) {
    int level = 1;
    for (double c : out.cuts)
      if (v > c) ++level;
    out.levels.push_back(level);
    seen.insert(level);
  }
  out.usable = seen.size() > 1;
  return out;
}

struct DiscretizeResult {
  OrdinalDataset data;
  std::vector<std::string> unusable;  // names of single-level columns
};

inline DiscretizeResult discretize_table(const CsvTable& t, int levels) {
  DiscretizeResult r;
  const int n = static_cast<int>(t.rows.size());
  const int p = static_cast<int>(t.header.size());
  if (n == 0) throw std::runtime_error("discretize: no data rows");
  r.data.variable_names = t.header;
  r.data.values.resize(n, p);
  r.data.level_counts.assign(p, levels);
  for (int j = 0; j < p; ++j) {
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i)
      col[i] = detail::parse_double(t.rows[i][j], "row " + std::to_string(i + 1) + " column " + t.header[j]);
    const auto d = discretize_column(col, levels);
    for (int i = 0; i < n; ++i) r.data.values(i, j) = d.levels[i];
    if (!d.usable) r.unusable.push_back(t.header[j]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Key-value configuration
// ---------------------------------------------------------------------------

/// Flat `key = value` lines; `#` starts a comment. Blocks are separated by a
/// line holding `---`.
using KeyValues = std::map<std::string, std::string>;

inline std::vector<KeyValues> parse_key_value_blocks(std::istream& in, const std::string& origin) {
  std::vector<KeyValues> blocks(1);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line == "---") {
      blocks.emplace_back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": empty key");
    if (!blocks.back().emplace(key, value).second)
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  blocks.erase(std::remove_if(blocks.begin(), blocks.end(), [](const KeyValues& b) { return b.empty(); }),
               blocks.end());
  return blocks;
}

inline std::vector<KeyValues> read_key_value_blocks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_key_value_blocks(in, path);
}

inline KeyValues read_key_values(const std::string& path) {
  const auto blocks = read_key_value_blocks(path);
  if (blocks.size() > 1) throw std::invalid_argument(path + ": expected a single block");
  return blocks.empty() ? KeyValues{} : blocks.front();
}

inline const std::vector<std::string>& chain_keys() {
  static const std::vector<std::string> keys = {
      "iterations", "burn_in", "seed", "label_mode", "aux_components", "t_max", "gamma", "a",
      "mu0", "b", "d_scale", "q", "k_prior_lambda", "threshold_bound", "relocation"};
  return keys;
}

inline const std::vector<std::string>& design_keys() {
  static const std::vector<std::string> keys = {"name", "k_true", "sizes", "p", "levels", "structures", "seed"};
  return keys;
}

inline void reject_unknown_keys(const KeyValues& kv, const std::vector<std::string>& allowed,
                                const std::string& context) {
  for (const auto& [k, v] : kv)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw std::invalid_argument(context + ": unknown key '" + k + "'");
}

/// Chain configuration from key-value pairs. mu0 and d_scale are scalars:
/// mu0 fills every component and D = d_scale * I. k_prior_lambda is the rate
/// of the zero-truncated Poisson prior on K.
inline ChainConfig chain_config_from(const KeyValues& kv, const std::string& context = "config") {
  reject_unknown_keys(kv, chain_keys(), context);
  ChainConfig c;
  const auto get = [&](const std::string& k) -> const std::string* {
    const auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("iterations")) c.iterations = static_cast<int>(detail::parse_integer(*v, "iterations"));
  if (auto v = get("burn_in")) c.burn_in = static_cast<int>(detail::parse_integer(*v, "burn_in"));
  if (auto v = get("seed")) c.seed = detail::parse_seed(*v, "seed");
  if (auto v = get("label_mode")) c.label_mode = parse_label_mode(*v);
  if (auto v = get("aux_components"))
    c.aux_components = static_cast<int>(detail::parse_integer(*v, "aux_components"));
  if (auto v = get("t_max")) c.t_max = static_cast<int>(detail::parse_integer(*v, "t_max"));
  if (auto v = get("gamma")) c.hyper.gamma = detail::parse_double(*v, "gamma");
  if (auto v = get("a")) c.hyper.a = detail::parse_double(*v, "a");
  if (auto v = get("b")) c.hyper.b = detail::parse_double(*v, "b");
  if (auto v = get("q")) c.hyper.q = detail::parse_double(*v, "q");
  if (auto v = get("k_prior_lambda"))
    c.hyper.k_prior = KPrior::truncated_poisson(detail::parse_double(*v, "k_prior_lambda"));
  if (auto v = get("threshold_bound")) c.thresholds.bound = detail::parse_double(*v, "threshold_bound");
  if (auto v = get("relocation")) {
    if (*v != "true" && *v != "false") throw std::invalid_argument(context + ": relocation must be true or false");
    c.relocation = *v == "true";
  }
  return c;
}

/// mu0 and D depend on p; applied once the data dimension is known.
inline void apply_dimensioned_keys(ChainConfig& c, const KeyValues& kv, int p) {
  if (auto it = kv.find("mu0"); it != kv.end())
    c.hyper.mu0 = Vector::Constant(p, detail::parse_double(it->second, "mu0"));
  if (auto it = kv.find("d_scale"); it != kv.end())
    c.hyper.D = detail::parse_double(it->second, "d_scale") * Matrix::Identity(p, p);
}

/// Canonical key-value text of a chain configuration (every key, sorted).
inline KeyValues resolved_chain_keys(const ChainConfig& c, const KeyValues& given) {
  KeyValues kv;
  kv["iterations"] = std::to_string(c.iterations);
  kv["burn_in"] = std::to_string(c.burn_in);
  kv["seed"] = std::to_string(c.seed);
  kv["label_mode"] = to_string(c.label_mode);
  kv["aux_components"] = std::to_string(c.aux_components);
  kv["t_max"] = std::to_string(c.t_max);
  kv["gamma"] = detail::format_double(c.hyper.gamma);
  kv["a"] = detail::format_double(c.hyper.a);
  kv["b"] = detail::format_double(c.hyper.b);
  kv["q"] = detail::format_double(c.hyper.q);
  kv["mu0"] = given.count("mu0") ? given.at("mu0") : "0";
  kv["d_scale"] = given.count("d_scale") ? given.at("d_scale") : "1";
  kv["k_prior_lambda"] = given.count("k_prior_lambda") ? given.at("k_prior_lambda") : "1";
  kv["threshold_bound"] = std::isfinite(c.thresholds.bound) ? detail::format_double(c.thresholds.bound) : "inf";
  kv["relocation"] = c.relocation ? "true" : "false";
  return kv;
}

inline std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& cell : detail::split(s, ','))
    out.push_back(static_cast<int>(detail::parse_integer(cell, what)));
  return out;
}

inline SimDesign design_from(const KeyValues& kv, const std::string& context = "design") {
  reject_unknown_keys(kv, design_keys(), context);
  SimDesign d;
  if (auto it = kv.find("name"); it != kv.end()) d.name = it->second;
  if (auto it = kv.find("k_true"); it != kv.end())
    d.k_true = static_cast<int>(detail::parse_integer(it->second, "k_true"));
  if (auto it = kv.find("p"); it != kv.end()) d.p = static_cast<int>(detail::parse_integer(it->second, "p"));
  if (auto it = kv.find("levels"); it != kv.end())
    d.levels = static_cast<int>(detail::parse_integer(it->second, "levels"));
  if (auto it = kv.find("seed"); it != kv.end()) d.seed = detail::parse_seed(it->second, "seed");
  if (auto it = kv.find("sizes"); it != kv.end()) {
    d.sizes = parse_int_list(it->second, "sizes");
    // A single size applies to every cluster.
    if (d.sizes.size() == 1) d.sizes.assign(d.k_true, d.sizes.front());
  } else {
    d.sizes.assign(d.k_true, 100);
  }
  if (auto it = kv.find("structures"); it != kv.end()) {
    d.structures.clear();
    for (const auto& s : detail::split(it->second, ',')) d.structures.push_back(parse_structure(s));
    if (d.structures.size() == 1) d.structures.assign(d.k_true, d.structures.front());
  } else {
    // Cycle through independent, chain, modified chain.
    d.structures.clear();
    for (int c = 0; c < d.k_true; ++c) d.structures.push_back(static_cast<StructureKind>(c % 3));
  }
  d.validate();
  return d;
}

inline KeyValues resolved_design_keys(const SimDesign& d) {
  KeyValues kv;
  kv["name"] = d.name;
  kv["k_true"] = std::to_string(d.k_true);
  kv["p"] = std::to_string(d.p);
  kv["levels"] = std::to_string(d.levels);
  kv["seed"] = std::to_string(d.seed);
  std::string sizes, kinds;
  for (int c = 0; c < d.k_true; ++c) {
    sizes += (c ? "," : "") + std::to_string(d.sizes[c]);
    kinds += (c ? "," : "") + to_string(d.structures[c]);
  }
  kv["sizes"] = sizes;
  kv["structures"] = kinds;
  return kv;
}

inline std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------
// Binary posterior samples
// ---------------------------------------------------------------------------

inline constexpr std::uint8_t kSamplesFormatVersion = 1;

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

inline std::uint64_t get_le(const std::string& buf, std::size_t& pos, int bytes) {
  if (pos + bytes > buf.size()) throw std::runtime_error("samples file truncated");
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + k])) << (8 * k);
  pos += bytes;
  return v;
}

inline void put_record(std::string& out, const std::string& payload) {
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out += payload;
}

}  // namespace detail

inline std::string encode_samples(const PosteriorSamples& s) {
  std::string out = "MFMP";
  out.push_back(static_cast<char>(kSamplesFormatVersion));
  std::string header;
  detail::put_u32(header, static_cast<std::uint32_t>(s.n));
  detail::put_u32(header, static_cast<std::uint32_t>(s.p));
  detail::put_u64(header, s.seed);
  detail::put_u32(header, static_cast<std::uint32_t>(s.draws.size()));
  detail::put_record(out, header);
  for (const auto& d : s.draws) {
    std::string rec;
    detail::put_u32(rec, static_cast<std::uint32_t>(d.iteration));
    detail::put_u32(rec, static_cast<std::uint32_t>(d.cluster_count()));
    for (int c : d.labels) detail::put_u32(rec, static_cast<std::uint32_t>(c));
    for (const auto& g : d.graphs)
      for (int r = 0; r < s.p; ++r)
        for (int c = r + 1; c < s.p; ++c) rec.push_back(g.has_edge(r, c) ? 1 : 0);
    detail::put_record(out, rec);
  }
  return out;
}

inline PosteriorSamples decode_samples(const std::string& buf) {
  if (buf.size() < 5 || buf.compare(0, 4, "MFMP") != 0) throw std::runtime_error("not an MFMP samples file");
  if (static_cast<std::uint8_t>(buf[4]) != kSamplesFormatVersion)
    throw std::runtime_error("unsupported samples format version");
  std::size_t pos = 5;
  const auto header_len = detail::get_le(buf, pos, 4);
  const std::size_t header_end = pos + header_len;
  PosteriorSamples s;
  s.n = static_cast<int>(detail::get_le(buf, pos, 4));
  s.p = static_cast<int>(detail::get_le(buf, pos, 4));
  s.seed = detail::get_le(buf, pos, 8);
  const auto count = detail::get_le(buf, pos, 4);
  if (pos != header_end) throw std::runtime_error("samples header has unexpected length");
  for (std::uint64_t m = 0; m < count; ++m) {
    const auto len = detail::get_le(buf, pos, 4);
    const std::size_t end = pos + len;
    PosteriorDraw d;
    d.iteration = static_cast<int>(detail::get_le(buf, pos, 4));
    const int k = static_cast<int>(detail::get_le(buf, pos, 4));
    d.labels.resize(s.n);
    for (int& c : d.labels) c = static_cast<int>(detail::get_le(buf, pos, 4));
    for (int c = 0; c < k; ++c) {
      Graph g(s.p);
      for (int r = 0; r < s.p; ++r)
        for (int col = r + 1; col < s.p; ++col)
          if (detail::get_le(buf, pos, 1)) g.set_edge(r, col, true);
      d.graphs.push_back(std::move(g));
    }
    if (pos != end) throw std::runtime_error("samples record has unexpected length");
    s.draws.push_back(std::move(d));
  }
  if (pos != buf.size()) throw std::runtime_error("trailing bytes in samples file");
  return s;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

using Json = nlohmann::ordered_json;

inline Json to_json(const Graph& g) {
  Json rows = Json::array();
  const auto m = g.to_matrix();
  for (int r = 0; r < g.size(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < g.size(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Graph graph_from_json(const Json& j) {
  const int p = static_cast<int>(j.size());
  Graph g(p);
  for (int r = 0; r < p; ++r) {
    if (static_cast<int>(j[r].size()) != p) throw std::runtime_error("adjacency matrix is not square");
    for (int c = r + 1; c < p; ++c)
      if (j[r][c].get<int>() != 0) g.set_edge(r, c, true);
  }
  return g;
}

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

inline Json provenance(std::uint64_t seed, const std::string& hash) {
  return Json{{"version", kVersion}, {"seed", seed}, {"config_hash", hash}};
}

inline Json truth_to_json(const SimDesign& d, const GroundTruth& t, const std::string& hash) {
  Json j = provenance(d.seed, hash);
  j["design"] = d.name;
  j["k_true"] = d.k_true;
  j["n"] = t.labels.size();
  j["p"] = d.p;
  j["labels"] = t.labels;
  Json cuts = Json::array();
  for (const auto& c : t.thresholds.cuts) cuts.push_back(c);
  j["thresholds"] = cuts;
  Json clusters = Json::array();
  for (int c = 0; c < d.k_true; ++c) {
    clusters.push_back(Json{{"label", c + 1},
                            {"size", d.sizes[c]},
                            {"structure", to_string(d.structures[c])},
                            {"mean", to_json(t.means[c])},
                            {"adjacency", to_json(t.graphs[c])},
                            {"concentration", to_json(t.concentrations[c])}});
  }
  j["clusters"] = clusters;
  return j;
}

inline Json fit_to_json(const FitSummary& fit, const PosteriorSamples& samples, const OrdinalDataset& data,
                        const ChainConfig& config, const std::string& hash) {
  Json j = provenance(config.seed, hash);
  j["n"] = data.rows();
  j["p"] = data.cols();
  j["label_mode"] = to_string(config.label_mode);
  j["iterations"] = config.iterations;
  j["burn_in"] = config.burn_in;
  j["dahl_draw"] = fit.dahl.index;
  j["dahl_iteration"] = samples.draws[fit.dahl.index].iteration;
  j["dahl_criterion"] = fit.dahl.criterion;
  j["k"] = fit.k();
  Json sizes = Json::array();
  for (const auto& g : fit.groups) sizes.push_back(g.size);
  j["group_sizes"] = sizes;
  j["labels"] = fit.labels;
  Json kp = Json::object();
  for (std::size_t k = 1; k < fit.k_posterior.size(); ++k)
    if (fit.k_posterior[k] > 0.0) kp[std::to_string(k)] = fit.k_posterior[k];
  j["k_posterior"] = kp;
  j["edge_acceptance_rate"] =
      samples.edge_proposals ? static_cast<double>(samples.edge_accepts) / samples.edge_proposals : 0.0;
  j["betweenness_convention"] = "unnormalized shortest-path pair counts, each unordered pair counted once";
  Json groups = Json::array();
  for (const auto& g : fit.groups) {
    Json nodes = Json::array();
    for (int v = 0; v < data.cols(); ++v)
      nodes.push_back(Json{{"variable", data.name(v)},
                           {"degree", g.nodes.degree[v]},
                           {"degree_centrality", g.nodes.degree_centrality[v]},
                           {"betweenness", g.nodes.betweenness[v]}});
    groups.push_back(Json{{"label", g.label},
                          {"size", g.size},
                          {"adjacency", to_json(g.graph)},
                          {"edge_posterior", to_json(g.edge_prob)},
                          {"network", Json{{"N", g.size},
                                           {"max_degree", g.stats.max_degree},
                                           {"total_degree", g.stats.total_degree},
                                           {"avg_degree_centrality", g.stats.avg_degree_centrality},
                                           {"avg_betweenness", g.stats.avg_betweenness}}},
                          {"nodes", nodes}});
  }
  j["groups"] = groups;
  return j;
}

inline void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace mfmpgm
