#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "krongp/kernels.hpp"

namespace krongp {

enum class Family { Gaussian, Bernoulli };

/// One repeated-measure grid component: the unique covariate rows in
/// first-appearance order, plus the kernel assigned to it.
struct ComponentBlock {
  Eigen::MatrixXd unique_rows;            // N_i x p_i
  std::vector<std::string> column_names;  // length p_i
  KernelSpec kernel;

  Eigen::Index size() const { return unique_rows.rows(); }
};

struct GridDesign {
  std::array<ComponentBlock, 3> components;
  int n_outputs = 0;
  std::vector<Family> output_families;      // Gaussian entries first
  std::vector<std::string> output_names;

  Eigen::Index n1() const { return components[0].size(); }
  Eigen::Index n2() const { return components[1].size(); }
  Eigen::Index n3() const { return components[2].size(); }
  Eigen::Index cells() const { return n1() * n2() * n3(); }
  Eigen::Index latent_size() const { return cells() * n_outputs; }
  int n_gaussian() const;
  int n_bernoulli() const { return n_outputs - n_gaussian(); }

  void validate() const;  // throws on invariant violation
};

/// Outcome values on the grid, N4 x (N1 N2 N3), with a missingness mask.
struct OutcomeMatrix {
  Eigen::MatrixXd values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed;

  void validate(const GridDesign& design) const;
};

/// Normative flat layout: component-1 index fastest, output slowest.
struct CellIndex {
  int output = 0, i3 = 0, i2 = 0, i1 = 0;

  Eigen::Index flat(const GridDesign& d) const {
    return ((static_cast<Eigen::Index>(output) * d.n3() + i3) * d.n2() + i2) * d.n1() + i1;
  }
  Eigen::Index cell_flat(const GridDesign& d) const {
    return (static_cast<Eigen::Index>(i3) * d.n2() + i2) * d.n1() + i1;
  }
  static CellIndex from_flat(const GridDesign& d, Eigen::Index flat);
};

/// Column roles for CSV ingestion, parsed from the JSON schema sidecar.
struct IngestSchema {
  // role per column name: component1|component2|component3,
  // component1_key|component2_key|component3_key,
  // outcome:gaussian|outcome:bernoulli, ignore
  std::vector<std::pair<std::string, std::string>> columns;

  static IngestSchema from_json_file(const std::string& path);
  void to_json_file(const std::string& path) const;
};

struct GridData {
  GridDesign design;
  OutcomeMatrix outcomes;
};

/// Long-format CSV to grid representation.  Unseen grid cells become
/// unobserved; duplicate cells and inconsistent covariates are errors.
GridData ingest_long_csv(const std::string& path, const IngestSchema& schema);

/// Rebuild the long table (one row per grid cell, NA for unobserved
/// entries) together with its schema; inverse of ingest_long_csv.
void write_long_csv(const GridData& data, const std::string& csv_path,
                    const std::string& schema_path);

struct StandardizationRecord {
  struct ColumnStats {
    bool applied = false;
    double mean = 0.0, sd = 1.0;
  };
  std::array<std::vector<ColumnStats>, 3> covariates;
  std::vector<ColumnStats> outputs;
};

/// Center/scale continuous covariate columns and Gaussian outputs to
/// mean 0, population sd 1 over observed entries.  Binary columns and
/// Bernoulli outputs pass through.  Throws on zero-variance continuous
/// columns.
GridData standardize(const GridData& data, StandardizationRecord& record);

/// Exact inverse of standardize.
GridData unstandardize(const GridData& data, const StandardizationRecord& record);

/// One-hot encoding; every value must appear in `levels`.
Eigen::MatrixXd one_hot(const std::vector<std::string>& column,
                        const std::vector<std::string>& levels);

}  // namespace krongp
