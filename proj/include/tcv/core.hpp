#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcv/rng.hpp"

namespace tcv {

using Index = Eigen::Index;
using IndexList = std::vector<Index>;
// Row membership flags; 1 = member.
using Mask = std::vector<std::uint8_t>;

// Rows of (predictor vector, response). Immutable after construction.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::string> column_names = {});

  Index rows() const noexcept { return x_.rows(); }
  Index cols() const noexcept { return x_.cols(); }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }

  std::optional<Index> find_column(std::string_view name) const;
  Index column(std::string_view name) const;  // throws invalid_data

  Eigen::MatrixXd rows_x(std::span<const Index> rows) const;
  Eigen::VectorXd rows_y(std::span<const Index> rows) const;
  Dataset subset(std::span<const Index> rows) const;

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  std::vector<std::string> names_;
};

// A conjunction of single-column comparisons, e.g. AGE < 50 or
// -0.5 < X1 < 0.5 && -0.5 < X2 < 0.5. The empty region contains everything.
class Region {
 public:
  enum class Op { lt, le, gt, ge, eq, ne };

  struct Condition {
    std::string column;
    Index index = -1;
    Op op = Op::lt;
    double value = 0.0;
  };

  Region() = default;
  explicit Region(std::vector<Condition> conditions);

  static Region everything() { return Region{}; }
  static Region where(std::string column, Index index, Op op, double value);
  Region and_where(std::string column, Index index, Op op, double value) const;

  // Resolves column names to indices against a schema.
  Region bound_to(const std::vector<std::string>& column_names) const;

  bool contains(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  Mask mask(const Eigen::MatrixXd& x) const;
  Index count(const Eigen::MatrixXd& x) const;
  bool is_everything() const noexcept { return conditions_.empty(); }
  const std::vector<Condition>& conditions() const noexcept { return conditions_; }

  std::string describe() const;

 private:
  std::vector<Condition> conditions_;
};

std::string_view to_string(Region::Op op);
Region::Op parse_region_op(std::string_view text);

struct Split {
  IndexList train;
  IndexList test;
};

// Uniformly random train subset of size n1 (without replacement). With a
// stratum mask, stratum-member rows get floor(count * n1 / n) training slots
// and the remainder goes to non-members. Indices in both lists are sorted.
Split make_split(Index n, Index n1, const Mask* stratum, const RngSpec& rng);

// Audit information a fitted model exposes in reports.
struct FitSummary {
  std::string kind;
  std::map<std::string, double> values;
  std::vector<double> coefficients;
  std::vector<std::string> warnings;
};

class PredictorModel {
 public:
  virtual ~PredictorModel() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& x) const = 0;
  virtual FitSummary summary() const = 0;
};

// A fitted regression function. Cheap to copy; the model is shared and
// immutable, so predictors can be used from several threads.
class Predictor {
 public:
  Predictor(std::shared_ptr<const PredictorModel> model, int candidate_id, Index n_train);

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const { return model_->predict(x); }
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

  int candidate_id() const noexcept { return candidate_id_; }
  Index n_train() const noexcept { return n_train_; }
  FitSummary summary() const { return model_->summary(); }

  Predictor with_candidate(int id) const;

 private:
  std::shared_ptr<const PredictorModel> model_;
  int candidate_id_;
  Index n_train_;
};

}  // namespace tcv
