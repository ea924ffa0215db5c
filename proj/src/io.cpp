#include "stpp/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace stpp {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return os;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && s[b] == ' ') ++b;
  return s.substr(b);
}

double parse_double(const std::string& text, const std::string& where) {
  const std::string s = strip(text);
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw FormatError(where + ": cannot parse '" + s + "' as a number");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

std::filesystem::path window_sidecar(const std::filesystem::path& csv) {
  auto out = csv;
  out.replace_extension(".window.json");
  return out;
}

std::string window_to_json(const Window& w) {
  json j;
  j["lo"] = std::vector<double>(w.lo().data(), w.lo().data() + w.dim());
  j["hi"] = std::vector<double>(w.hi().data(), w.hi().data() + w.dim());
  j["t"] = {w.t_lo(), w.t_hi()};
  return j.dump(2) + "\n";
}

Window window_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("window json: ") + e.what());
  }
  for (const auto& [key, _] : j.items())
    if (key != "lo" && key != "hi" && key != "t") throw FormatError("window json: unknown key '" + key + "'");
  if (!j.contains("lo") || !j.contains("hi") || !j.contains("t"))
    throw FormatError("window json: requires lo, hi and t");
  const auto lo = j["lo"].get<std::vector<double>>();
  const auto hi = j["hi"].get<std::vector<double>>();
  const auto t = j["t"].get<std::vector<double>>();
  if (t.size() != 2) throw FormatError("window json: t must be [t_lo, t_hi]");
  return Window(Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size())),
                t[0], t[1]);
}

void write_pattern(const PointPattern& p, const std::filesystem::path& csv) {
  auto os = open_out(csv);
  for (Eigen::Index k = 0; k < p.dim(); ++k) os << 'x' << (k + 1) << ',';
  os << "t\n";
  for (const auto& q : p.points()) {
    for (Eigen::Index k = 0; k < q.dim(); ++k) os << format_double(q.space[k]) << ',';
    os << format_double(q.time) << '\n';
  }
  auto side = open_out(window_sidecar(csv));
  side << window_to_json(p.window());
}

PointPattern read_pattern(const std::filesystem::path& csv) {
  std::ifstream is(csv);
  if (!is) throw std::runtime_error("cannot open pattern " + csv.string());
  std::ifstream side(window_sidecar(csv));
  if (!side) throw FormatError("missing window sidecar " + window_sidecar(csv).string());
  std::stringstream buf;
  buf << side.rdbuf();
  const Window w = window_from_json(buf.str());

  std::string line;
  if (!std::getline(is, line)) throw FormatError(csv.string() + ": empty file");
  const auto header = split(strip(line));
  const auto d = static_cast<Eigen::Index>(header.size()) - 1;
  if (d != w.dim()) throw DimensionMismatch(csv.string() + ": header dimension differs from window");
  for (Eigen::Index k = 0; k < d; ++k)
    if (strip(header[static_cast<std::size_t>(k)]) != "x" + std::to_string(k + 1))
      throw FormatError(csv.string() + ": expected header x1,...,xd,t");
  if (strip(header.back()) != "t") throw FormatError(csv.string() + ": last column must be t");

  std::vector<SpacetimePoint> pts;
  for (int row = 2; std::getline(is, line); ++row) {
    line = strip(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = csv.string() + ":" + std::to_string(row);
    if (static_cast<Eigen::Index>(cells.size()) != d + 1) throw FormatError(where + ": wrong column count");
    Eigen::VectorXd x(d);
    for (Eigen::Index k = 0; k < d; ++k) x[k] = parse_double(cells[static_cast<std::size_t>(k)], where);
    pts.emplace_back(std::move(x), parse_double(cells.back(), where));
  }
  return PointPattern(std::move(pts), w);
}

namespace {

void write_rows(const SummaryEstimate& e, const Envelope* env, std::ostream& os) {
  os << "r,t,F_hat,G_hat,J_hat,K_hat,n_centers,n_probes,defined";
  if (env) os << ",lo,hi";
  os << '\n';
  for (Eigen::Index j = 0; j < e.grid.cols(); ++j) {
    for (Eigen::Index i = 0; i < e.grid.rows(); ++i) {
      os << format_double(e.grid.r[static_cast<std::size_t>(i)]) << ','
         << format_double(e.grid.t[static_cast<std::size_t>(j)]) << ',' << format_double(e.F_hat(i, j))
         << ',' << format_double(e.G_hat(i, j)) << ',' << format_double(e.J_hat(i, j)) << ','
         << format_double(e.K_hat(i, j)) << ',' << e.n_centers(i, j) << ',' << e.n_probes(i, j) << ','
         << (e.defined(i, j) ? 1 : 0);
      if (env) os << ',' << format_double(env->lo(i, j)) << ',' << format_double(env->hi(i, j));
      os << '\n';
    }
  }
}

}  // namespace

void write_summary_csv(const SummaryEstimate& e, std::ostream& os) { write_rows(e, nullptr, os); }

void write_summary_csv(const SummaryEstimate& e, const std::filesystem::path& path) {
  auto os = open_out(path);
  write_rows(e, nullptr, os);
}

void write_envelope_csv(const SummaryEstimate& observed, const Envelope& env, std::ostream& os) {
  if (observed.grid.r != env.grid.r || observed.grid.t != env.grid.t)
    throw std::invalid_argument("envelope and observed estimate use different range grids");
  write_rows(observed, &env, os);
}

void write_envelope_csv(const SummaryEstimate& observed, const Envelope& env,
                        const std::filesystem::path& path) {
  auto os = open_out(path);
  write_envelope_csv(observed, env, os);
}

SummaryEstimate read_summary_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open summary " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw FormatError(path.string() + ": empty file");
  const auto header = split(strip(line));
  std::map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c) col[strip(header[c])] = c;
  for (const char* name : {"r", "t", "F_hat", "G_hat", "J_hat", "K_hat", "n_centers", "n_probes"})
    if (!col.count(name)) throw FormatError(path.string() + ": missing column '" + name + "'");

  struct Row {
    double r, t, F, G, J, K;
    int nc, np;
  };
  std::vector<Row> rows;
  for (int n = 2; std::getline(is, line); ++n) {
    line = strip(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = path.string() + ":" + std::to_string(n);
    if (cells.size() != header.size()) throw FormatError(where + ": wrong column count");
    auto num = [&](const char* name) { return parse_double(cells[col.at(name)], where); };
    rows.push_back({num("r"), num("t"), num("F_hat"), num("G_hat"), num("J_hat"), num("K_hat"),
                    static_cast<int>(num("n_centers")), static_cast<int>(num("n_probes"))});
  }
  if (rows.empty()) throw FormatError(path.string() + ": no data rows");
  std::vector<double> rs, ts;
  for (const auto& row : rows) {
    rs.push_back(row.r);
    ts.push_back(row.t);
  }
  for (auto* v : {&rs, &ts}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  SummaryEstimate e(RangeGrid(rs, ts));
  for (const auto& row : rows) {
    const auto i = static_cast<Eigen::Index>(std::lower_bound(rs.begin(), rs.end(), row.r) - rs.begin());
    const auto j = static_cast<Eigen::Index>(std::lower_bound(ts.begin(), ts.end(), row.t) - ts.begin());
    e.F_hat(i, j) = row.F;
    e.G_hat(i, j) = row.G;
    e.J_hat(i, j) = row.J;
    e.K_hat(i, j) = row.K;
    e.n_centers(i, j) = row.nc;
    e.n_probes(i, j) = row.np;
  }
  return e;
}

}  // namespace stpp
