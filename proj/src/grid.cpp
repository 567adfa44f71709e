#include "krongp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace krongp {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_missing_field(const std::string& s) { return s.empty() || s == "NA"; }

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::runtime_error("non-numeric " + what + ": '" + s + "'");
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool column_is_binary(const Eigen::VectorXd& col) {
  return ((col.array() == 0.0) || (col.array() == 1.0)).all();
}

KernelSpec default_kernel(const Eigen::MatrixXd& rows) {
  KernelSpec spec;
  std::vector<int> continuous, all;
  for (int c = 0; c < rows.cols(); ++c) {
    all.push_back(c);
    if (!column_is_binary(rows.col(c))) continuous.push_back(c);
  }
  if (!continuous.empty()) {
    spec.kind = KernelKind::SE_ARD;
    spec.active_columns = continuous;
  } else {
    spec.kind = KernelKind::Linear;
    spec.active_columns = all;
  }
  return spec;
}

}  // namespace

int GridDesign::n_gaussian() const {
  return static_cast<int>(
      std::count(output_families.begin(), output_families.end(), Family::Gaussian));
}

void GridDesign::validate() const {
  for (const auto& comp : components) {
    if (comp.size() < 1) throw std::runtime_error("GridDesign: empty component");
    for (Eigen::Index i = 0; i < comp.size(); ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        if (comp.unique_rows.row(i) == comp.unique_rows.row(j))
          throw std::runtime_error("GridDesign: duplicate component rows");
  }
  if (n_outputs < 1 || static_cast<int>(output_families.size()) != n_outputs)
    throw std::runtime_error("GridDesign: bad output count");
  // Gaussian block must be contiguous and first.
  bool seen_bernoulli = false;
  for (Family f : output_families) {
    if (f == Family::Bernoulli) seen_bernoulli = true;
    else if (seen_bernoulli)
      throw std::runtime_error("GridDesign: Gaussian outputs must precede Bernoulli outputs");
  }
}

void OutcomeMatrix::validate(const GridDesign& design) const {
  if (values.rows() != design.n_outputs || values.cols() != design.cells() ||
      observed.rows() != values.rows() || observed.cols() != values.cols())
    throw std::runtime_error("OutcomeMatrix: shape inconsistent with design");
  for (int o = 0; o < design.n_outputs; ++o) {
    bool any = false;
    for (Eigen::Index m = 0; m < values.cols(); ++m) {
      if (!observed(o, m)) continue;
      any = true;
      if (design.output_families[o] == Family::Bernoulli &&
          values(o, m) != 0.0 && values(o, m) != 1.0)
        throw std::runtime_error("OutcomeMatrix: Bernoulli value outside {0,1}");
    }
    if (!any)
      std::cerr << "warning: output " << design.output_names[o]
                << " has no observed entries (pure prior)\n";
  }
}

CellIndex CellIndex::from_flat(const GridDesign& d, Eigen::Index flat) {
  CellIndex c;
  c.i1 = static_cast<int>(flat % d.n1());
  flat /= d.n1();
  c.i2 = static_cast<int>(flat % d.n2());
  flat /= d.n2();
  c.i3 = static_cast<int>(flat % d.n3());
  c.output = static_cast<int>(flat / d.n3());
  return c;
}

IngestSchema IngestSchema::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema: " + path);
  nlohmann::json j;
  in >> j;
  IngestSchema s;
  for (const auto& [name, role] : j.at("columns").items())
    s.columns.emplace_back(name, role.get<std::string>());
  return s;
}

void IngestSchema::to_json_file(const std::string& path) const {
  nlohmann::ordered_json cols;
  for (const auto& [name, role] : columns) cols[name] = role;
  nlohmann::ordered_json j;
  j["columns"] = cols;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write schema: " + path);
  out << j.dump(2) << "\n";
}

GridData ingest_long_csv(const std::string& path, const IngestSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);

  // Resolve column indices per role.
  std::array<std::vector<int>, 3> cov_cols, key_cols;
  std::vector<int> gauss_cols, bern_cols;
  auto role_of = [&](const std::string& name) -> std::string {
    for (const auto& [n, r] : schema.columns)
      if (n == name) return r;
    return "ignore";
  };
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string role = role_of(header[c]);
    if (role == "ignore") continue;
    else if (role == "component1") cov_cols[0].push_back(c);
    else if (role == "component2") cov_cols[1].push_back(c);
    else if (role == "component3") cov_cols[2].push_back(c);
    else if (role == "component1_key") key_cols[0].push_back(c);
    else if (role == "component2_key") key_cols[1].push_back(c);
    else if (role == "component3_key") key_cols[2].push_back(c);
    else if (role == "outcome:gaussian") gauss_cols.push_back(c);
    else if (role == "outcome:bernoulli") bern_cols.push_back(c);
    else throw std::runtime_error("unknown schema role: " + role);
  }
  for (int k = 0; k < 3; ++k)
    if (cov_cols[k].empty() && key_cols[k].empty())
      throw std::runtime_error("schema missing component " + std::to_string(k + 1));
  if (gauss_cols.empty() && bern_cols.empty())
    throw std::runtime_error("schema names no outcome columns");

  // Gaussian outputs first, then Bernoulli (normative ordering).
  std::vector<int> out_cols = gauss_cols;
  out_cols.insert(out_cols.end(), bern_cols.begin(), bern_cols.end());
  const int n_outputs = static_cast<int>(out_cols.size());

  struct Row {
    std::array<int, 3> comp;
    std::vector<std::string> outcome_fields;
  };
  std::array<std::map<std::string, int>, 3> comp_index;
  std::array<std::vector<std::vector<double>>, 3> comp_rows;
  std::vector<Row> rows;

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("CSV line " + std::to_string(lineno) + ": field count mismatch");
    Row row;
    for (int k = 0; k < 3; ++k) {
      std::vector<double> cov(cov_cols[k].size());
      for (std::size_t c = 0; c < cov_cols[k].size(); ++c)
        cov[c] = parse_number(fields[cov_cols[k][c]], "covariate " + header[cov_cols[k][c]]);
      std::string key;
      const std::vector<int>& kc = key_cols[k].empty() ? cov_cols[k] : key_cols[k];
      for (int c : kc) key += fields[c] + "\x1f";
      auto [it, inserted] = comp_index[k].emplace(key, static_cast<int>(comp_rows[k].size()));
      if (inserted) {
        comp_rows[k].push_back(cov);
      } else if (comp_rows[k][it->second] != cov) {
        throw std::runtime_error("CSV line " + std::to_string(lineno) +
                                 ": inconsistent covariates for component " + std::to_string(k + 1));
      }
      row.comp[k] = it->second;
    }
    for (int c : out_cols) row.outcome_fields.push_back(fields[c]);
    rows.push_back(std::move(row));
  }

  GridData data;
  GridDesign& design = data.design;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Index n = static_cast<Eigen::Index>(comp_rows[k].size());
    const Eigen::Index p = static_cast<Eigen::Index>(cov_cols[k].size());
    design.components[k].unique_rows.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index c = 0; c < p; ++c)
        design.components[k].unique_rows(i, c) = comp_rows[k][i][c];
    for (int c : cov_cols[k]) design.components[k].column_names.push_back(header[c]);
    design.components[k].kernel = default_kernel(design.components[k].unique_rows);
  }
  design.n_outputs = n_outputs;
  for (std::size_t i = 0; i < gauss_cols.size(); ++i) design.output_families.push_back(Family::Gaussian);
  for (std::size_t i = 0; i < bern_cols.size(); ++i) design.output_families.push_back(Family::Bernoulli);
  for (int c : out_cols) design.output_names.push_back(header[c]);
  design.validate();

  OutcomeMatrix& y = data.outcomes;
  y.values = Eigen::MatrixXd::Zero(n_outputs, design.cells());
  y.observed.setConstant(n_outputs, design.cells(), false);
  std::set<Eigen::Index> seen_cells;
  for (const Row& row : rows) {
    CellIndex ci{0, row.comp[2], row.comp[1], row.comp[0]};
    const Eigen::Index m = ci.cell_flat(design);
    if (!seen_cells.insert(m).second)
      throw std::runtime_error("duplicate cell in CSV: " + path);
    for (int o = 0; o < n_outputs; ++o) {
      const std::string& f = row.outcome_fields[o];
      if (is_missing_field(f)) continue;
      const double v = parse_number(f, "outcome " + design.output_names[o]);
      if (design.output_families[o] == Family::Bernoulli && v != 0.0 && v != 1.0)
        throw std::runtime_error("Bernoulli value outside {0,1} for " + design.output_names[o]);
      y.values(o, m) = v;
      y.observed(o, m) = true;
    }
  }
  y.validate(design);
  return data;
}

void write_long_csv(const GridData& data, const std::string& csv_path,
                    const std::string& schema_path) {
  const GridDesign& d = data.design;
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write CSV: " + csv_path);

  IngestSchema schema;
  std::vector<std::string> header;
  for (int k = 0; k < 3; ++k)
    for (const std::string& name : d.components[k].column_names) {
      header.push_back(name);
      schema.columns.emplace_back(name, "component" + std::to_string(k + 1));
    }
  for (int o = 0; o < d.n_outputs; ++o) {
    header.push_back(d.output_names[o]);
    schema.columns.emplace_back(
        d.output_names[o],
        d.output_families[o] == Family::Gaussian ? "outcome:gaussian" : "outcome:bernoulli");
  }
  for (std::size_t c = 0; c < header.size(); ++c)
    out << header[c] << (c + 1 == header.size() ? "\n" : ",");

  for (int i3 = 0; i3 < d.n3(); ++i3)
    for (int i2 = 0; i2 < d.n2(); ++i2)
      for (int i1 = 0; i1 < d.n1(); ++i1) {
        CellIndex ci{0, i3, i2, i1};
        const Eigen::Index m = ci.cell_flat(d);
        std::vector<std::string> fields;
        const std::array<int, 3> idx{i1, i2, i3};
        for (int k = 0; k < 3; ++k)
          for (Eigen::Index c = 0; c < d.components[k].unique_rows.cols(); ++c)
            fields.push_back(format_number(d.components[k].unique_rows(idx[k], c)));
        for (int o = 0; o < d.n_outputs; ++o)
          fields.push_back(data.outcomes.observed(o, m) ? format_number(data.outcomes.values(o, m))
                                                        : "NA");
        for (std::size_t c = 0; c < fields.size(); ++c)
          out << fields[c] << (c + 1 == fields.size() ? "\n" : ",");
      }
  if (!schema_path.empty()) schema.to_json_file(schema_path);
}

GridData standardize(const GridData& data, StandardizationRecord& record) {
  GridData out = data;
  for (int k = 0; k < 3; ++k) {
    auto& comp = out.design.components[k];
    record.covariates[k].assign(comp.unique_rows.cols(), {});
    for (Eigen::Index c = 0; c < comp.unique_rows.cols(); ++c) {
      Eigen::VectorXd col = comp.unique_rows.col(c);
      if (column_is_binary(col)) continue;
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().mean());  // population sd
      if (sd < 1e-12)
        throw std::runtime_error("standardize: zero-variance continuous column '" +
                                 comp.column_names[c] + "'; drop it from the schema");
      comp.unique_rows.col(c) = (col.array() - mean) / sd;
      record.covariates[k][c] = {true, mean, sd};
    }
  }
  record.outputs.assign(out.design.n_outputs, {});
  for (int o = 0; o < out.design.n_outputs; ++o) {
    if (out.design.output_families[o] != Family::Gaussian) continue;
    double sum = 0.0, sum2 = 0.0;
    Eigen::Index n = 0;
    for (Eigen::Index m = 0; m < out.outcomes.values.cols(); ++m)
      if (out.outcomes.observed(o, m)) {
        sum += out.outcomes.values(o, m);
        sum2 += out.outcomes.values(o, m) * out.outcomes.values(o, m);
        ++n;
      }
    if (n == 0) continue;
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double sd = var > 1e-24 ? std::sqrt(var) : 1.0;
    for (Eigen::Index m = 0; m < out.outcomes.values.cols(); ++m)
      if (out.outcomes.observed(o, m))
        out.outcomes.values(o, m) = (out.outcomes.values(o, m) - mean) / sd;
    record.outputs[o] = {true, mean, sd};
  }
  return out;
}

GridData unstandardize(const GridData& data, const StandardizationRecord& record) {
  GridData out = data;
  for (int k = 0; k < 3; ++k) {
    auto& comp = out.design.components[k];
    for (Eigen::Index c = 0; c < comp.unique_rows.cols(); ++c) {
      const auto& st = record.covariates[k][c];
      if (st.applied) comp.unique_rows.col(c) = comp.unique_rows.col(c).array() * st.sd + st.mean;
    }
  }
  for (int o = 0; o < out.design.n_outputs; ++o) {
    const auto& st = record.outputs[o];
    if (!st.applied) continue;
    for (Eigen::Index m = 0; m < out.outcomes.values.cols(); ++m)
      if (out.outcomes.observed(o, m))
        out.outcomes.values(o, m) = out.outcomes.values(o, m) * st.sd + st.mean;
  }
  return out;
}

Eigen::MatrixXd one_hot(const std::vector<std::string>& column,
                        const std::vector<std::string>& levels) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(column.size(), levels.size());
  for (std::size_t i = 0; i < column.size(); ++i) {
    const auto it = std::find(levels.begin(), levels.end(), column[i]);
    if (it == levels.end()) throw std::runtime_error("one_hot: unseen level '" + column[i] + "'");
    out(i, it - levels.begin()) = 1.0;
  }
  return out;
}

}  // namespace krongp
