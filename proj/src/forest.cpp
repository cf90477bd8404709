#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>

#include "tcv/error.hpp"
#include "tcv/estimators.hpp"

namespace tcv {

namespace {

struct Node {
  Index feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

using Tree = std::vector<Node>;

double leaf_value(const Tree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int k = 0;
  while (tree[static_cast<std::size_t>(k)].feature >= 0) {
    const Node& node = tree[static_cast<std::size_t>(k)];
    k = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return tree[static_cast<std::size_t>(k)].value;
}

// Training columns as dense ranks into their sorted distinct values, so that
// large nodes can be split with a counting pass instead of a sort.
struct RankedColumns {
  std::vector<std::int32_t> rank;        // n x p, column-major
  std::vector<std::vector<double>> values;  // distinct sorted values per column
  Index n = 0;

  explicit RankedColumns(const Eigen::MatrixXd& x) : rank(static_cast<std::size_t>(x.size())), n(x.rows()) {
    values.resize(static_cast<std::size_t>(x.cols()));
    std::vector<std::pair<double, Index>> col(static_cast<std::size_t>(n));
    for (Index f = 0; f < x.cols(); ++f) {
      for (Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = {x(i, f), i};
      std::sort(col.begin(), col.end());
      auto& v = values[static_cast<std::size_t>(f)];
      for (const auto& [value, row] : col) {
        if (v.empty() || v.back() != value) v.push_back(value);
        rank[static_cast<std::size_t>(f * n + row)] = static_cast<std::int32_t>(v.size() - 1);
      }
    }
  }

  std::int32_t at(Index row, Index f) const { return rank[static_cast<std::size_t>(f * n + row)]; }
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const RankedColumns& ranked, const Eigen::VectorXd& y,
              const ForestConfig& cfg, Engine& engine)
      : x_(x), ranked_(ranked), y_(y), cfg_(cfg), engine_(engine), features_(static_cast<std::size_t>(x.cols())) {
    std::iota(features_.begin(), features_.end(), Index{0});
  }

  Tree build(std::vector<Index> rows) {
    Tree tree;
    grow(tree, rows, 0, rows.size(), 0);
    return tree;
  }

 private:
  struct Best {
    Index feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  int grow(Tree& tree, std::vector<Index>& rows, std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(tree.size());
    tree.emplace_back();
    const auto count = static_cast<double>(end - begin);
    double sum = 0.0;
    double lo = y_[rows[begin]];
    double hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[rows[i]];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    tree[static_cast<std::size_t>(id)].value = sum / count;

    const bool depth_ok = !cfg_.max_depth || depth < *cfg_.max_depth;
    if (!depth_ok || end - begin < 2 * static_cast<std::size_t>(cfg_.min_leaf) || lo == hi) return id;

    const Best best = find_split(rows, begin, end, sum);
    if (best.feature < 0) return id;

    const auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                    rows.begin() + static_cast<std::ptrdiff_t>(end),
                                    [&](Index r) { return x_(r, best.feature) <= best.threshold; });
    const auto split_at = static_cast<std::size_t>(mid - rows.begin());
    const int left = grow(tree, rows, begin, split_at, depth + 1);
    const int right = grow(tree, rows, split_at, end, depth + 1);
    Node& node = tree[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  // Groups are the node's distinct values in increasing order; cuts fall
  // between consecutive groups.
  void consider(Best& best, Index f, std::size_t n, double sum, double base,
                std::span<const std::int32_t> group_rank, std::span<const std::size_t> group_count,
                std::span<const double> group_sum) const {
    const auto min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
    const auto& values = ranked_.values[static_cast<std::size_t>(f)];
    std::size_t nl = 0;
    double left_sum = 0.0;
    for (std::size_t g = 0; g + 1 < group_rank.size(); ++g) {
      nl += group_count[g];
      left_sum += group_sum[g];
      if (nl < min_leaf) continue;
      if (n - nl < min_leaf) break;
      const double right_sum = sum - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(nl) +
                          right_sum * right_sum / static_cast<double>(n - nl) - base;
      if (gain > best.gain) {
        const double a = values[static_cast<std::size_t>(group_rank[g])];
        const double b = values[static_cast<std::size_t>(group_rank[g + 1])];
        best.gain = gain;
        best.feature = f;
        best.threshold = 0.5 * (a + b);
        // Midpoints can round onto the upper value; keep the split strict.
        if (!(best.threshold < b)) best.threshold = a;
      }
    }
  }

  Best find_split(const std::vector<Index>& rows, std::size_t begin, std::size_t end, double sum) {
    const std::size_t n = end - begin;
    const double base = sum * sum / static_cast<double>(n);
    Best best;
    // Partial Fisher-Yates: the first mtry entries become this node's features.
    const auto p = features_.size();
    for (std::size_t k = 0; k < static_cast<std::size_t>(cfg_.mtry); ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, p - 1);
      std::swap(features_[k], features_[pick(engine_)]);
    }
    for (std::size_t k = 0; k < static_cast<std::size_t>(cfg_.mtry); ++k) {
      const Index f = features_[k];
      const std::size_t distinct = ranked_.values[static_cast<std::size_t>(f)].size();
      group_rank_.clear();
      group_count_.clear();
      group_sum_.clear();
      if (8 * n >= distinct) {
        bucket_count_.assign(distinct, 0);
        bucket_sum_.assign(distinct, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
          const auto r = static_cast<std::size_t>(ranked_.at(rows[i], f));
          ++bucket_count_[r];
          bucket_sum_[r] += y_[rows[i]];
        }
        for (std::size_t r = 0; r < distinct; ++r) {
          if (bucket_count_[r] == 0) continue;
          group_rank_.push_back(static_cast<std::int32_t>(r));
          group_count_.push_back(bucket_count_[r]);
          group_sum_.push_back(bucket_sum_[r]);
        }
      } else {
        pairs_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          const Index r = rows[begin + i];
          pairs_[i] = {ranked_.at(r, f), y_[r]};
        }
        std::sort(pairs_.begin(), pairs_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [r, v] : pairs_) {
          if (group_rank_.empty() || group_rank_.back() != r) {
            group_rank_.push_back(r);
            group_count_.push_back(0);
            group_sum_.push_back(0.0);
          }
          ++group_count_.back();
          group_sum_.back() += v;
        }
      }
      consider(best, f, n, sum, base, group_rank_, group_count_, group_sum_);
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const RankedColumns& ranked_;
  const Eigen::VectorXd& y_;
  const ForestConfig& cfg_;
  Engine& engine_;
  std::vector<Index> features_;
  std::vector<std::pair<std::int32_t, double>> pairs_;
  std::vector<std::int32_t> group_rank_;
  std::vector<std::size_t> group_count_;
  std::vector<double> group_sum_;
  std::vector<std::size_t> bucket_count_;
  std::vector<double> bucket_sum_;
};

class ForestModel final : public PredictorModel {
 public:
  ForestModel(std::vector<Tree> trees, int mtry, int min_leaf)
      : trees_(std::move(trees)), mtry_(mtry), min_leaf_(min_leaf) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    Eigen::VectorXd out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
      const Eigen::RowVectorXd row = x.row(i);
      double s = 0.0;
      for (const auto& tree : trees_) s += leaf_value(tree, row);
      out[i] = s / static_cast<double>(trees_.size());
    }
    return out;
  }

  FitSummary summary() const override {
    FitSummary s;
    s.kind = "forest";
    s.values["trees"] = static_cast<double>(trees_.size());
    s.values["mtry"] = mtry_;
    s.values["min_leaf"] = min_leaf_;
    std::size_t nodes = 0;
    for (const auto& t : trees_) nodes += t.size();
    s.values["mean_nodes"] = static_cast<double>(nodes) / static_cast<double>(trees_.size());
    return s;
  }

 private:
  std::vector<Tree> trees_;
  int mtry_;
  int min_leaf_;
};

}  // namespace

Predictor fit_forest(const ForestConfig& cfg, const Dataset& data, std::span<const Index> train,
                     const RngSpec& rng) {
  const auto n = static_cast<Index>(train.size());
  if (cfg.n_trees < 1) throw Error(ErrorCode::invalid_config, "forest needs at least one tree");
  if (cfg.min_leaf < 1) throw Error(ErrorCode::invalid_config, "forest min_leaf must be >= 1");
  if (cfg.mtry < 1 || cfg.mtry > data.cols()) {
    throw Error(ErrorCode::invalid_config, "forest mtry must lie in [1, p]");
  }
  if (n < cfg.min_leaf || n < 1) {
    throw Error(ErrorCode::invalid_data, "forest needs at least min_leaf training rows");
  }
  const Eigen::MatrixXd x = data.rows_x(train);
  const Eigen::VectorXd y = data.rows_y(train);
  const RankedColumns ranked(x);

  std::vector<Tree> trees(static_cast<std::size_t>(cfg.n_trees));
  parallel_for(cfg.exec, cfg.n_trees, [&](std::ptrdiff_t t) {
    Engine engine = rng.child(Purpose::tree, static_cast<std::uint64_t>(t)).engine();
    std::vector<Index> rows(static_cast<std::size_t>(n));
    if (cfg.bootstrap) {
      std::uniform_int_distribution<Index> draw(0, n - 1);
      for (auto& r : rows) r = draw(engine);
    } else {
      std::iota(rows.begin(), rows.end(), Index{0});
    }
    TreeBuilder builder(x, ranked, y, cfg, engine);
    trees[static_cast<std::size_t>(t)] = builder.build(std::move(rows));
  });
  return Predictor(std::make_shared<ForestModel>(std::move(trees), cfg.mtry, cfg.min_leaf), -1, n);
}

}  // namespace tcv
