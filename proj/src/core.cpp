#include "tcv/core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tcv/error.hpp"

namespace tcv {

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::string> column_names)
    : x_(std::move(x)), y_(std::move(y)), names_(std::move(column_names)) {
  if (x_.rows() < 1 || x_.cols() < 1) {
    throw Error(ErrorCode::invalid_data, "dataset needs at least one row and one column");
  }
  if (x_.rows() != y_.size()) {
    throw Error(ErrorCode::invalid_data, "predictor and response row counts differ");
  }
  if (!x_.allFinite() || !y_.allFinite()) {
    throw Error(ErrorCode::invalid_data, "dataset contains non-finite values");
  }
  if (names_.empty()) {
    names_.reserve(static_cast<std::size_t>(x_.cols()));
    for (Index j = 0; j < x_.cols(); ++j) names_.push_back("X" + std::to_string(j));
  } else if (static_cast<Index>(names_.size()) != x_.cols()) {
    throw Error(ErrorCode::invalid_data, "column name count does not match column count");
  }
}

std::optional<Index> Dataset::find_column(std::string_view name) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (names_[j] == name) return static_cast<Index>(j);
  }
  return std::nullopt;
}

Index Dataset::column(std::string_view name) const {
  if (auto j = find_column(name)) return *j;
  throw Error(ErrorCode::invalid_data, "unknown column '" + std::string(name) + "'");
}

Eigen::MatrixXd Dataset::rows_x(std::span<const Index> rows) const {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), x_.cols());
  for (Index j = 0; j < x_.cols(); ++j) {
    const double* src = x_.col(j).data();
    double* dst = out.col(j).data();
    for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
  }
  return out;
}

Eigen::VectorXd Dataset::rows_y(std::span<const Index> rows) const {
  Eigen::VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = y_[rows[i]];
  return out;
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  return Dataset(rows_x(rows), rows_y(rows), names_);
}

// ---------------------------------------------------------------------------

Region::Region(std::vector<Condition> conditions) : conditions_(std::move(conditions)) {}

Region Region::where(std::string column, Index index, Op op, double value) {
  return Region({Condition{std::move(column), index, op, value}});
}

Region Region::and_where(std::string column, Index index, Op op, double value) const {
  Region out = *this;
  out.conditions_.push_back(Condition{std::move(column), index, op, value});
  return out;
}

Region Region::bound_to(const std::vector<std::string>& column_names) const {
  Region out = *this;
  for (auto& c : out.conditions_) {
    auto it = std::find(column_names.begin(), column_names.end(), c.column);
    if (it == column_names.end()) {
      throw Error(ErrorCode::invalid_config, "region references unknown column '" + c.column + "'");
    }
    c.index = static_cast<Index>(it - column_names.begin());
  }
  return out;
}

namespace {

bool compare(double lhs, Region::Op op, double rhs) {
  switch (op) {
    case Region::Op::lt: return lhs < rhs;
    case Region::Op::le: return lhs <= rhs;
    case Region::Op::gt: return lhs > rhs;
    case Region::Op::ge: return lhs >= rhs;
    case Region::Op::eq: return lhs == rhs;
    case Region::Op::ne: return lhs != rhs;
  }
  return false;
}

}  // namespace

bool Region::contains(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  for (const auto& c : conditions_) {
    if (c.index < 0 || c.index >= row.size()) {
      throw Error(ErrorCode::invalid_config, "region column '" + c.column + "' is not bound");
    }
    if (!compare(row[c.index], c.op, c.value)) return false;
  }
  return true;
}

Mask Region::mask(const Eigen::MatrixXd& x) const {
  Mask out(static_cast<std::size_t>(x.rows()), 1);
  for (const auto& c : conditions_) {
    if (c.index < 0 || c.index >= x.cols()) {
      throw Error(ErrorCode::invalid_config, "region column '" + c.column + "' is not bound");
    }
    const auto col = x.col(c.index);
    for (Index i = 0; i < x.rows(); ++i) {
      if (out[static_cast<std::size_t>(i)] && !compare(col[i], c.op, c.value)) {
        out[static_cast<std::size_t>(i)] = 0;
      }
    }
  }
  return out;
}

Index Region::count(const Eigen::MatrixXd& x) const {
  const Mask m = mask(x);
  return static_cast<Index>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

std::string Region::describe() const {
  if (conditions_.empty()) return "everything";
  std::ostringstream os;
  for (std::size_t i = 0; i < conditions_.size(); ++i) {
    if (i) os << " && ";
    os << conditions_[i].column << ' ' << to_string(conditions_[i].op) << ' '
       << conditions_[i].value;
  }
  return os.str();
}

std::string_view to_string(Region::Op op) {
  switch (op) {
    case Region::Op::lt: return "<";
    case Region::Op::le: return "<=";
    case Region::Op::gt: return ">";
    case Region::Op::ge: return ">=";
    case Region::Op::eq: return "==";
    case Region::Op::ne: return "!=";
  }
  return "?";
}

Region::Op parse_region_op(std::string_view text) {
  if (text == "<") return Region::Op::lt;
  if (text == "<=") return Region::Op::le;
  if (text == ">") return Region::Op::gt;
  if (text == ">=") return Region::Op::ge;
  if (text == "==") return Region::Op::eq;
  if (text == "!=") return Region::Op::ne;
  throw Error(ErrorCode::schema, "unknown comparison operator '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

namespace {

// Moves a uniformly random `take`-subset of pool into the front (partial
// Fisher-Yates).
void draw_subset(IndexList& pool, Index take, Engine& engine) {
  const auto size = static_cast<Index>(pool.size());
  for (Index i = 0; i < take; ++i) {
    std::uniform_int_distribution<Index> pick(i, size - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(engine))]);
  }
}

}  // namespace

Split make_split(Index n, Index n1, const Mask* stratum, const RngSpec& rng) {
  if (n1 < 1 || n1 >= n) {
    throw Error(ErrorCode::invalid_plan, "training size n1=" + std::to_string(n1) +
                                             " must satisfy 1 <= n1 < n=" + std::to_string(n));
  }
  Engine engine = rng.engine();
  Split split;
  split.train.reserve(static_cast<std::size_t>(n1));
  split.test.reserve(static_cast<std::size_t>(n - n1));

  if (stratum == nullptr) {
    IndexList pool(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    draw_subset(pool, n1, engine);
    split.train.assign(pool.begin(), pool.begin() + n1);
    split.test.assign(pool.begin() + n1, pool.end());
  } else {
    if (static_cast<Index>(stratum->size()) != n) {
      throw Error(ErrorCode::stratification, "stratum mask length does not match n");
    }
    IndexList members;
    IndexList others;
    for (Index i = 0; i < n; ++i) {
      ((*stratum)[static_cast<std::size_t>(i)] ? members : others).push_back(i);
    }
    if (members.empty() || others.empty()) {
      throw Error(ErrorCode::stratification, "stratified split needs both strata nonempty");
    }
    const auto a = static_cast<Index>(members.size());
    const auto b = static_cast<Index>(others.size());
    Index take_members = a * n1 / n;
    Index take_others = n1 - take_members;
    if (take_others > b) {
      take_others = b;
      take_members = n1 - b;
    }
    draw_subset(members, take_members, engine);
    draw_subset(others, take_others, engine);
    split.train.assign(members.begin(), members.begin() + take_members);
    split.train.insert(split.train.end(), others.begin(), others.begin() + take_others);
    split.test.assign(members.begin() + take_members, members.end());
    split.test.insert(split.test.end(), others.begin() + take_others, others.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

// ---------------------------------------------------------------------------

Predictor::Predictor(std::shared_ptr<const PredictorModel> model, int candidate_id, Index n_train)
    : model_(std::move(model)), candidate_id_(candidate_id), n_train_(n_train) {}

double Predictor::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  Eigen::MatrixXd x = row;
  return model_->predict(x)[0];
}

Predictor Predictor::with_candidate(int id) const {
  Predictor out = *this;
  out.candidate_id_ = id;
  return out;
}

}  // namespace tcv
