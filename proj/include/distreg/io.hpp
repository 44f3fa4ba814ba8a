#pragma once

// CSV and JSON persistence for readings, quantile matrices, covariates and results.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "distdata.hpp"
#include "errors.hpp"
#include "frechet.hpp"
#include "geodesic.hpp"
#include "stability.hpp"
#include "version.hpp"

namespace distreg::io {

using json = nlohmann::json;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_of;  // source line per row, for messages

  int column(const std::string& name) const {
    for (size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return static_cast<int>(c);
    return -1;
  }
};

// RFC-4180 reader. Lines starting with '#' before the header are comments.
inline CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>") {
  CsvTable t;
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF && static_cast<unsigned char>(text[1]) == 0xBB &&
      static_cast<unsigned char>(text[2]) == 0xBF)
    text.erase(0, 3);
  size_t pos = 0;
  int line = 1;
  bool have_header = false;
  while (pos < text.size()) {
    if (!have_header && text[pos] == '#') {
      size_t nl = text.find('\n', pos);
      pos = nl == std::string::npos ? text.size() : nl + 1;
      ++line;
      continue;
    }
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, any = false;
    const int start_line = line;
    while (pos < text.size()) {
      char ch = text[pos];
      if (quoted) {
        if (ch == '"') {
          if (pos + 1 < text.size() && text[pos + 1] == '"') {
            field += '"';
            pos += 2;
            continue;
          }
          quoted = false;
          ++pos;
          continue;
        }
        if (ch == '\n') ++line;
        field += ch;
        ++pos;
        continue;
      }
      if (ch == '"') {
        quoted = true;
        any = true;
        ++pos;
      } else if (ch == ',') {
        rec.push_back(std::move(field));
        field.clear();
        any = true;
        ++pos;
      } else if (ch == '\r') {
        ++pos;
      } else if (ch == '\n') {
        ++pos;
        ++line;
        break;
      } else {
        field += ch;
        any = true;
        ++pos;
      }
    }
    if (quoted) throw InputError(source + ": unterminated quoted field starting on line " + std::to_string(start_line));
    if (!any && field.empty()) continue;  // blank line
    rec.push_back(std::move(field));
    if (!have_header) {
      t.header = std::move(rec);
      have_header = true;
      continue;
    }
    if (rec.size() != t.header.size())
      throw InputError(source + ": line " + std::to_string(start_line) + " has " + std::to_string(rec.size()) +
                       " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(rec));
    t.line_of.push_back(start_line);
  }
  if (!have_header) throw InputError(source + ": missing header");
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return parse_csv(in, path);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline double parse_number(const std::string& s, const std::string& where) {
  if (s == "inf" || s == "Inf") return kInf;
  if (s == "-inf" || s == "-Inf") return -kInf;
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(where + ": '" + s + "' is not a number");
  }
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void comment(const std::string& text) { os_ << "# " << text << "\r\n"; }
  void row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << csv_escape(fields[i]);
    }
    os_ << "\r\n";
  }

 private:
  std::ostream& os_;
};

// FNV-1a over the canonical JSON dump.
inline std::string config_hash(const json& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline std::string provenance_line(std::uint64_t seed, const json& config) {
  return std::string("distreg ") + DISTREG_VERSION + " seed=" + std::to_string(seed) + " config=" + config_hash(config);
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << content;
  if (!out) throw InputError("write failed for " + path);
}

// Long-format readings: subject_id,timestamp,value (timestamp optional). Empty value registers
// the subject without a reading.
inline RawReadingTable read_readings(const std::string& path) {
  CsvTable t = read_csv(path);
  int cs = t.column("subject_id"), cv = t.column("value"), ct = t.column("timestamp");
  if (cs < 0 || cv < 0) throw InputError(path + ": header must contain subject_id and value");
  RawReadingTable raw;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    Reading rec;
    rec.subject = row[cs];
    if (rec.subject.empty()) throw InputError(path + ": line " + std::to_string(t.line_of[r]) + ": empty subject_id");
    if (!row[cv].empty()) rec.value = parse_number(row[cv], path + ": line " + std::to_string(t.line_of[r]));
    if (ct >= 0) rec.timestamp = row[ct];
    raw.records.push_back(std::move(rec));
  }
  return raw;
}

inline QuantileMatrix read_quantiles(const std::string& path, int expect_m = 0) {
  CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "subject_id") throw InputError(path + ": first column must be subject_id");
  const int m = static_cast<int>(t.header.size()) - 1;
  for (int j = 1; j <= m; ++j)
    if (t.header[j] != "q" + std::to_string(j)) throw InputError(path + ": expected column q" + std::to_string(j));
  if (expect_m > 0 && m != expect_m)
    throw InputError(path + ": has " + std::to_string(m) + " quantile columns, configuration says m=" +
                     std::to_string(expect_m));
  if (m < 2) throw InputError(path + ": need at least two quantile columns");
  Eigen::MatrixXd V(static_cast<Eigen::Index>(t.rows.size()), m);
  std::vector<std::string> subjects;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    subjects.push_back(t.rows[r][0]);
    for (int j = 0; j < m; ++j)
      V(static_cast<Eigen::Index>(r), j) = parse_number(t.rows[r][j + 1], path + ": line " + std::to_string(t.line_of[r]));
  }
  return QuantileMatrix(QuantileGrid(m), std::move(V), std::move(subjects));
}

inline std::string quantiles_csv(const QuantileMatrix& Q, const std::string& provenance) {
  std::ostringstream os;
  CsvWriter w(os);
  w.comment(provenance);
  std::vector<std::string> h{"subject_id"};
  for (int j = 1; j <= Q.m(); ++j) h.push_back("q" + std::to_string(j));
  w.row(h);
  for (int i = 0; i < Q.n(); ++i) {
    std::vector<std::string> row{Q.subjects.empty() ? std::to_string(i + 1) : Q.subjects[i]};
    for (int j = 0; j < Q.m(); ++j) row.push_back(fmt(Q.values(i, j)));
    w.row(row);
  }
  return os.str();
}

struct Covariates {
  std::vector<std::string> subjects;
  std::vector<std::string> names;
  Eigen::MatrixXd X;
};

inline Covariates read_covariates(const std::string& path) {
  CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "subject_id") throw InputError(path + ": first column must be subject_id");
  Covariates c;
  c.names.assign(t.header.begin() + 1, t.header.end());
  c.X.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(c.names.size()));
  for (size_t r = 0; r < t.rows.size(); ++r) {
    c.subjects.push_back(t.rows[r][0]);
    for (size_t k = 0; k < c.names.size(); ++k)
      c.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          parse_number(t.rows[r][k + 1], path + ": line " + std::to_string(t.line_of[r]));
  }
  return c;
}

// Reorders covariate rows to follow `subjects`; every subject must be present.
inline Eigen::MatrixXd align_covariates(const Covariates& c, const std::vector<std::string>& subjects) {
  std::map<std::string, int> where;
  for (size_t i = 0; i < c.subjects.size(); ++i)
    if (!where.emplace(c.subjects[i], static_cast<int>(i)).second)
      throw InputError("covariates: duplicate subject " + c.subjects[i]);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(subjects.size()), c.X.cols());
  for (size_t i = 0; i < subjects.size(); ++i) {
    auto it = where.find(subjects[i]);
    if (it == where.end()) throw InputError("covariates: no row for subject '" + subjects[i] + "'");
    out.row(static_cast<Eigen::Index>(i)) = c.X.row(it->second);
  }
  return out;
}

inline std::string covariates_csv(const std::vector<std::string>& subjects, const std::vector<std::string>& names,
                                  const Eigen::MatrixXd& X, const std::string& provenance) {
  std::ostringstream os;
  CsvWriter w(os);
  w.comment(provenance);
  std::vector<std::string> h{"subject_id"};
  h.insert(h.end(), names.begin(), names.end());
  w.row(h);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<std::string> row{subjects[i]};
    for (Eigen::Index k = 0; k < X.cols(); ++k) row.push_back(fmt(X(i, k)));
    w.row(row);
  }
  return os.str();
}

inline json design_sidecar(const Design& d, bool scaled) {
  json j;
  j["names"] = d.names;
  j["scaled"] = scaled;
  j["means"] = std::vector<double>(d.column_means.data(), d.column_means.data() + d.column_means.size());
  j["scales"] = std::vector<double>(d.column_scales.data(), d.column_scales.data() + d.column_scales.size());
  return j;
}

// Applies stored training statistics to new raw covariates.
inline Eigen::MatrixXd transform_with_sidecar(const json& side, const Eigen::MatrixXd& raw) {
  auto means = side.at("means").get<std::vector<double>>();
  auto scales = side.at("scales").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(means.size()) != raw.cols() || scales.size() != means.size())
    throw InputError("design sidecar does not match the covariate width");
  Eigen::MatrixXd out = raw;
  for (Eigen::Index k = 0; k < raw.cols(); ++k) out.col(k) = (raw.col(k).array() - means[k]) / scales[k];
  return out;
}

inline std::string path_csv(const SolutionPath& path, const std::vector<std::string>& names,
                            const std::string& provenance) {
  std::ostringstream os;
  CsvWriter w(os);
  w.comment(provenance);
  w.row({"tau", "k", "variable_name", "lambda_k", "f_value"});
  for (size_t t = 0; t < path.taus.size(); ++t)
    for (Eigen::Index k = 0; k < path.lambdas[t].lambda.size(); ++k)
      w.row({fmt(path.taus[t]), std::to_string(k + 1), names.empty() ? "x" + std::to_string(k + 1) : names[k],
             fmt(path.lambdas[t].lambda[k]), fmt(path.objectives[t])});
  return os.str();
}

inline json path_json(const SolutionPath& path) {
  json j;
  j["taus"] = path.taus;
  j["objectives"] = path.objectives;
  j["iterations"] = path.iterations;
  j["converged"] = path.converged;
  j["wall_time"] = path.wall_time;
  j["supports"] = json::array();
  for (auto& s : path.supports) {
    std::vector<int> one;
    for (int k : s) one.push_back(k + 1);
    j["supports"].push_back(one);
  }
  j["warnings"] = path.warnings;
  return j;
}

inline std::string stability_csv(const StabilityResult& r, const std::string& provenance) {
  std::ostringstream os;
  CsvWriter w(os);
  w.comment(provenance);
  w.row({"tau", "k", "variable_name", "pi_hat", "q_hat", "pi_thr", "selected"});
  std::vector<char> sel(r.p, 0);
  for (int k : r.selected) sel[k] = 1;
  for (size_t t = 0; t < r.taus.size(); ++t)
    for (int k = 0; k < r.p; ++k)
      w.row({fmt(r.taus[t]), std::to_string(k + 1), r.names.empty() ? "x" + std::to_string(k + 1) : r.names[k],
             fmt(r.pi_hat(k, static_cast<Eigen::Index>(t))), fmt(r.q_hat[t]),
             r.pi_thr.empty() ? "" : fmt(r.pi_thr[t]), sel[k] ? "1" : "0"});
  return os.str();
}

inline json stability_json(const StabilityResult& r) {
  json j;
  j["seed"] = r.seed;
  j["B"] = r.B;
  j["bound_mode"] = to_string(r.bound_mode);
  j["K"] = r.K;
  j["runtime_seconds"] = r.runtime;
  j["fits"] = r.fits;
  j["taus"] = r.taus;
  j["q_hat"] = r.q_hat;
  j["pi_thr"] = r.pi_thr;
  std::vector<bool> sat(r.saturated.begin(), r.saturated.end());
  j["saturated"] = sat;
  j["pairs_used"] = r.pairs_used;
  std::vector<std::string> sel;
  for (int k : r.selected) sel.push_back(r.names.empty() ? "x" + std::to_string(k + 1) : r.names[k]);
  j["selected"] = sel;
  j["warnings"] = r.warnings;
  return j;
}

}  // namespace distreg::io
