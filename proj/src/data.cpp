#include "releff/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "releff/error.hpp"
#include "releff/numeric.hpp"

namespace releff {

namespace {

const char* kModule = "dataset_core";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_no;  // 1-based data row numbers
};

RawTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("MissingFile", kModule, "cannot open '" + path + "'");
  RawTable t;
  std::string line;
  bool have_header = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (!have_header) {
      if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
      t.header = split_row(line);
      have_header = true;
      continue;
    }
    ++row;
    t.rows.push_back(split_row(line));
    t.line_no.push_back(row);
  }
  if (!have_header || t.rows.empty()) throw data_error("EmptyFile", kModule, "'" + path + "' has no data rows");
  return t;
}

std::size_t column(const RawTable& t, const std::string& name) {
  auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw data_error("MissingColumn", kModule, "column '" + name + "' not found");
  return static_cast<std::size_t>(it - t.header.begin());
}

double parse_real(const std::string& s, std::size_t row, const std::string& col) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v))
    throw data_error("NonFiniteValue", kModule,
                     "row " + std::to_string(row) + ", column '" + col + "': '" + s + "' is not a finite number");
  return v;
}

Eigen::MatrixXd parse_covariates(const RawTable& t, const CovariateSchema& schema) {
  schema.validate();
  Eigen::MatrixXd w(t.rows.size(), schema.d());
  for (std::size_t c = 0; c < schema.d(); ++c) {
    const auto& cov = schema.columns[c];
    const std::size_t idx = column(t, cov.name);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (idx >= t.rows[i].size())
        throw data_error("MissingColumn", kModule, "row " + std::to_string(t.line_no[i]) + " is too short");
      const std::string& cell = t.rows[i][idx];
      if (cov.kind == CovKind::discrete) {
        auto it = std::find(cov.levels.begin(), cov.levels.end(), cell);
        if (it == cov.levels.end())
          throw data_error("BadLevel", kModule,
                           "row " + std::to_string(t.line_no[i]) + ", column '" + cov.name + "': unknown level '" +
                               cell + "'");
        w(i, c) = static_cast<double>(it - cov.levels.begin());
      } else {
        w(i, c) = parse_real(cell, t.line_no[i], cov.name);
      }
    }
  }
  return w;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& w, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(rows.size(), w.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = w.row(rows[i]);
  return out;
}

template <class T>
std::vector<T> take(const std::vector<T>& v, const std::vector<std::size_t>& rows) {
  if (v.empty()) return {};
  std::vector<T> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

void check_weights(const std::vector<double>& wt, std::size_t n) {
  if (wt.empty()) return;
  if (wt.size() != n) throw data_error("WeightLength", kModule, "weight vector length differs from row count");
  for (double v : wt)
    if (!(v >= 0.0) || !std::isfinite(v)) throw data_error("NonFiniteValue", kModule, "weights must be finite and >= 0");
}

}  // namespace

bool CovariateSchema::has_continuous() const {
  return std::any_of(columns.begin(), columns.end(), [](const Covariate& c) { return c.kind == CovKind::continuous; });
}

void CovariateSchema::validate() const {
  std::set<std::string> names;
  for (const auto& c : columns) {
    if (c.name.empty()) throw config_error("BadSchema", kModule, "empty covariate name");
    if (c.name == "y" || c.name == "delta")
      throw config_error("BadSchema", kModule, "covariate name '" + c.name + "' is reserved");
    if (!names.insert(c.name).second) throw config_error("BadSchema", kModule, "duplicate covariate '" + c.name + "'");
    if (c.kind == CovKind::discrete) {
      if (c.levels.empty()) throw config_error("BadSchema", kModule, "discrete covariate '" + c.name + "' has no levels");
      std::set<std::string> lv(c.levels.begin(), c.levels.end());
      if (lv.size() != c.levels.size())
        throw config_error("BadSchema", kModule, "discrete covariate '" + c.name + "' repeats a level");
    }
  }
}

double OrdinalDataset::total_weight() const { return weight_total(wt, n()); }
double ContinuousDataset::total_weight() const { return weight_total(wt, n()); }

void OrdinalDataset::validate() const {
  if (K < 2) throw config_error("BadLevel", kModule, "ordinal outcome needs K >= 2");
  if (y.empty()) throw data_error("EmptyFile", kModule, "ordinal dataset has no rows");
  if (static_cast<std::size_t>(w.rows()) != y.size() || static_cast<std::size_t>(w.cols()) != schema.d())
    throw data_error("ShapeMismatch", kModule, "covariate matrix does not match rows/schema");
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] < 1 || y[i] > K)
      throw data_error("BadLevel", kModule,
                       "row " + std::to_string(i + 1) + ": y = " + std::to_string(y[i]) + " outside 1.." +
                           std::to_string(K));
  check_weights(wt, y.size());
}

void ContinuousDataset::validate() const {
  if (y.empty()) throw data_error("EmptyFile", kModule, "continuous dataset has no rows");
  if (static_cast<std::size_t>(w.rows()) != y.size() || static_cast<std::size_t>(w.cols()) != schema.d())
    throw data_error("ShapeMismatch", kModule, "covariate matrix does not match rows/schema");
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i])) throw data_error("NonFiniteValue", kModule, "row " + std::to_string(i + 1) + ": y");
  check_weights(wt, y.size());
}

void SurvivalDataset::validate() const {
  if (grid.empty()) throw config_error("BadGrid", kModule, "empty time grid");
  if (grid[0] <= 0.0) throw config_error("BadGrid", kModule, "grid must start above t_0 = 0");
  for (std::size_t j = 1; j < grid.size(); ++j)
    if (!(grid[j] > grid[j - 1])) throw config_error("BadGrid", kModule, "grid must be strictly increasing");
  if (y.empty()) throw data_error("EmptyFile", kModule, "survival dataset has no rows");
  if (delta.size() != y.size() || static_cast<std::size_t>(w.rows()) != y.size())
    throw data_error("ShapeMismatch", kModule, "survival columns have different lengths");
  bool any_event = false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 1 || y[i] > K()) throw data_error("BadLevel", kModule, "row " + std::to_string(i + 1) + ": bad grid index");
    if (delta[i] != 0 && delta[i] != 1)
      throw data_error("BadLevel", kModule, "row " + std::to_string(i + 1) + ": delta must be 0 or 1");
    any_event = any_event || delta[i] == 1;
  }
  if (!any_event) throw data_error("NoEvents", kModule, "survival dataset has no events");
}

OrdinalDataset load_ordinal_csv(const std::string& path, const CovariateSchema& schema, int K) {
  const RawTable t = read_table(path);
  OrdinalDataset d;
  d.schema = schema;
  d.K = K;
  const std::size_t yc = column(t, "y");
  d.w = parse_covariates(t, schema);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double v = parse_real(t.rows[i][yc], t.line_no[i], "y");
    if (v != std::floor(v) || v < 1 || v > K)
      throw data_error("BadLevel", kModule,
                       "row " + std::to_string(t.line_no[i]) + ": y = " + t.rows[i][yc] + " outside 1.." +
                           std::to_string(K));
    d.y.push_back(static_cast<int>(v));
  }
  d.validate();
  return d;
}

ContinuousDataset load_continuous_csv(const std::string& path, const CovariateSchema& schema) {
  const RawTable t = read_table(path);
  ContinuousDataset d;
  d.schema = schema;
  const std::size_t yc = column(t, "y");
  d.w = parse_covariates(t, schema);
  for (std::size_t i = 0; i < t.rows.size(); ++i) d.y.push_back(parse_real(t.rows[i][yc], t.line_no[i], "y"));
  d.y_min = *std::min_element(d.y.begin(), d.y.end());
  d.y_max = *std::max_element(d.y.begin(), d.y.end());
  d.validate();
  return d;
}

std::vector<double> make_grid(double bin_width, double horizon) {
  if (!(bin_width > 0.0)) throw config_error("BadGrid", kModule, "bin width must be positive");
  if (!(horizon > 0.0)) throw config_error("BadGrid", kModule, "horizon must be positive");
  const auto K = static_cast<std::size_t>(std::ceil(horizon / bin_width - 1e-9));
  std::vector<double> g(K);
  for (std::size_t j = 0; j < K; ++j) g[j] = static_cast<double>(j + 1) * bin_width;
  return g;
}

int bin_index(double t, const std::vector<double>& grid) {
  // Relative slack absorbs decimal round-off such as 0.6 vs 3 * 0.2.
  auto it = std::lower_bound(grid.begin(), grid.end(), t,
                             [](double g, double v) { return g * (1.0 + 1e-10) + 1e-14 < v; });
  if (it == grid.end()) return 0;
  return static_cast<int>(it - grid.begin()) + 1;
}

void bin_survival(const std::vector<double>& times, const std::vector<int>& events, const std::vector<double>& grid,
                  std::vector<int>& y, std::vector<int>& delta) {
  y.resize(times.size());
  delta.resize(times.size());
  const int K = static_cast<int>(grid.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const int j = bin_index(times[i], grid);
    if (j == 0) {
      y[i] = K;
      delta[i] = 0;
    } else {
      y[i] = j;
      delta[i] = events[i];
    }
  }
}

SurvivalDataset load_survival_csv(const std::string& path, const CovariateSchema& schema, const OutcomeSpec& spec) {
  const RawTable t = read_table(path);
  SurvivalDataset d;
  d.schema = schema;
  const std::size_t yc = column(t, "y");
  const std::size_t dc = column(t, "delta");
  d.w = parse_covariates(t, schema);
  std::vector<double> times;
  std::vector<int> events;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double v = parse_real(t.rows[i][yc], t.line_no[i], "y");
    if (v < 0) throw data_error("NonFiniteValue", kModule, "row " + std::to_string(t.line_no[i]) + ": negative time");
    const double e = parse_real(t.rows[i][dc], t.line_no[i], "delta");
    if (e != 0.0 && e != 1.0)
      throw data_error("BadLevel", kModule, "row " + std::to_string(t.line_no[i]) + ": delta must be 0 or 1");
    times.push_back(v);
    events.push_back(static_cast<int>(e));
  }
  if (!spec.grid.empty()) {
    d.grid = spec.grid;
  } else {
    const double h = spec.horizon > 0 ? spec.horizon : *std::max_element(times.begin(), times.end());
    d.grid = make_grid(spec.bin_width, h);
  }
  bin_survival(times, events, d.grid, d.y, d.delta);
  d.validate();
  return d;
}

Empirical empirical_from_levels(const std::vector<int>& y, int K, const std::vector<double>& wt) {
  Empirical e;
  e.p.assign(K, 0.0);
  std::vector<std::vector<double>> parts(K);
  for (std::size_t i = 0; i < y.size(); ++i) parts[y[i] - 1].push_back(wt_at(wt, i));
  const double n = weight_total(wt, y.size());
  for (int k = 0; k < K; ++k) e.p[k] = pairwise_sum(parts[k]) / n;
  e.F.assign(K, 0.0);
  e.eta.assign(K, 0.0);
  double c = 0.0;
  for (int k = 0; k < K; ++k) {
    c += e.p[k];
    e.F[k] = c;
    e.eta[k] = c - e.p[k] / 2.0;
  }
  e.F[K - 1] = 1.0;
  return e;
}

Empirical empirical_summary(const OrdinalDataset& data) { return empirical_from_levels(data.y, data.K, data.wt); }

void validate_trial(const TrialDataset& data) {
  if (!(data.pi > 0.0 && data.pi < 1.0))
    throw config_error("BadPi", kModule, "treatment probability must lie in (0,1)");
  double n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < data.a.size(); ++i) (data.a[i] == 1 ? n1 : n0) += wt_at(data.wt, i);
  if (n1 <= 0 || n0 <= 0) throw data_error("EmptyArm", "trial_estimators", "both arms must be non-empty");
}

CellIndex cell_index(const Eigen::MatrixXd& w) {
  CellIndex c;
  c.ids.resize(w.rows());
  std::map<std::vector<double>, int> seen;
  std::vector<double> key(w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) key[j] = w(i, j);
    auto [it, fresh] = seen.emplace(key, c.n_cells);
    if (fresh) {
      ++c.n_cells;
      c.first_row.push_back(static_cast<int>(i));
    }
    c.ids[i] = it->second;
  }
  return c;
}

OrdinalDataset subset(const OrdinalDataset& data, const std::vector<std::size_t>& rows) {
  OrdinalDataset d;
  d.schema = data.schema;
  d.K = data.K;
  d.y = take(data.y, rows);
  d.w = take_rows(data.w, rows);
  d.wt = take(data.wt, rows);
  return d;
}

ContinuousDataset subset(const ContinuousDataset& data, const std::vector<std::size_t>& rows) {
  ContinuousDataset d;
  d.schema = data.schema;
  d.y = take(data.y, rows);
  d.w = take_rows(data.w, rows);
  d.wt = take(data.wt, rows);
  d.y_min = data.y_min;
  d.y_max = data.y_max;
  return d;
}

SurvivalDataset subset(const SurvivalDataset& data, const std::vector<std::size_t>& rows) {
  SurvivalDataset d;
  d.schema = data.schema;
  d.grid = data.grid;
  d.y = take(data.y, rows);
  d.delta = take(data.delta, rows);
  d.w = take_rows(data.w, rows);
  return d;
}

TrialDataset expand(const TrialDataset& trial) {
  TrialDataset out;
  out.schema = trial.schema;
  out.K = trial.K;
  out.pi = trial.pi;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < trial.n(); ++i) {
    const double m = wt_at(trial.wt, i);
    const auto reps = static_cast<std::size_t>(std::llround(m));
    for (std::size_t r = 0; r < reps; ++r) idx.push_back(i);
  }
  out.w = take_rows(trial.w, idx);
  out.y = take(trial.y, idx);
  out.a = take(trial.a, idx);
  return out;
}

}  // namespace releff
