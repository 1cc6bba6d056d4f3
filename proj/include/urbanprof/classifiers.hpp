#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "urbanprof/matrix.hpp"

namespace urbanprof {

/// Feature rows with integer class labels in [0, class_names.size()).
struct Dataset {
  Matrix x;
  std::vector<int> y;
  std::vector<std::string> class_names;

  std::size_t size() const { return y.size(); }
  std::size_t class_count() const { return class_names.size(); }
  /// Throws DataError unless labels match rows and lie in range.
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

/// Builds a dataset from raw labels, numbering classes in ascending label
/// order; class names default to "S<label+1>".
Dataset make_dataset(Matrix x, std::span<const int> labels);

struct Prediction {
  int label = 0;
  std::vector<double> scores;  ///< per class, sums to 1
};

/// Majority vote among the k Euclidean nearest neighbors. Distance ties go
/// to the lower row index, vote ties to the smaller class index.
Prediction knn_classify(const Dataset& train, std::span<const double> x, std::size_t k);

struct TreeParams {
  int max_depth = -1;        ///< negative: unbounded
  std::size_t min_leaf = 1;
  std::size_t mtry = 0;      ///< features tried per split; 0 = all
};

/// Binary CART tree on axis-aligned thresholds minimizing Gini impurity.
/// Rows go left when x[feature] <= threshold.
class DecisionTree {
 public:
  /// `rows` selects (possibly repeated) training rows; empty means all.
  /// `rng` is only consulted when params.mtry < feature count.
  static DecisionTree fit(const Dataset& train, const TreeParams& params,
                          std::span<const std::size_t> rows = {}, std::mt19937_64* rng = nullptr);

  std::span<const double> predict_scores(std::span<const double> x) const;
  int predict(std::span<const double> x) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;
  std::size_t depth() const;
  /// Root split, if the root is not a leaf.
  std::optional<std::pair<std::size_t, double>> root_split() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  struct Node {
    int feature = -1;  ///< -1 for leaves
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t depth = 0;
    std::vector<double> distribution;
    friend bool operator==(const Node&, const Node&) = default;
  };
  std::vector<Node> nodes_;
  friend class TreeBuilder;
};

struct ForestParams {
  std::size_t n_trees = 100;
  int max_depth = -1;
  std::size_t min_leaf = 1;
  std::size_t mtry = 0;  ///< 0 = ceil(sqrt(q))
  bool bootstrap = true;
  std::uint64_t seed = 42;
};

/// Bagged CART trees with per-split feature sampling. Tree t is grown from
/// its own generator seeded with seed + t.
class RandomForest {
 public:
  static RandomForest fit(const Dataset& train, const ForestParams& params);
  std::vector<double> predict_scores(std::span<const double> x) const;
  int predict(std::span<const double> x) const;
  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t classes_ = 0;
};

struct KnnSpec {
  std::size_t k = 5;
};
struct TreeSpec {
  TreeParams params;
};
struct ForestSpec {
  ForestParams params;
};
struct MajoritySpec {};
struct RandomSpec {
  std::uint64_t seed = 42;
};
using ModelSpec = std::variant<KnnSpec, TreeSpec, ForestSpec, MajoritySpec, RandomSpec>;

std::string model_name(const ModelSpec& spec);

struct CvResult {
  double cv_error = 0.0;               ///< mean per-fold misclassification rate
  std::vector<double> fold_accuracy;
  std::vector<std::size_t> fold_of;    ///< fold index of every row
  std::vector<int> predicted;          ///< out-of-fold predictions
  Matrix scores;                       ///< out-of-fold class scores, n x classes
  bool stratified = true;              ///< false when the shuffle fallback was used
};

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing the fold counter across classes. Falls back to a plain
/// shuffle when a present class has fewer members than folds.
std::vector<std::size_t> assign_folds(std::span<const int> y, std::size_t folds,
                                      std::uint64_t seed, bool& stratified);

CvResult cross_validate(const Dataset& data, const ModelSpec& spec, std::size_t folds,
                        std::uint64_t seed);

struct ClassMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_measure;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  ///< +inf for the (0,0) start
};

struct EvalReport {
  std::size_t n = 0;
  double overall_acc = 0.0;
  double cv_error = 0.0;
  Matrix confusion;         ///< fractions; rows truth, columns prediction
  Matrix confusion_counts;
  std::vector<ClassMetrics> per_class;
  std::optional<double> macro_precision;
  std::optional<double> macro_recall;
  std::optional<double> macro_f;
  std::vector<std::vector<RocPoint>> roc;  ///< one-vs-rest; empty if undefined
  std::vector<std::optional<double>> auc;
};

/// Confusion, per-class precision/recall/F and one-vs-rest ROC. `scores`
/// may be empty (no ROC). cv_error is left at 1 - overall_acc.
EvalReport evaluate(std::span<const int> predicted, const Matrix& scores,
                    std::span<const int> truth, std::size_t class_count);

/// Uniformly random predictions.
EvalReport baseline_random(const Dataset& data, std::uint64_t seed);

void write_eval_csv(std::ostream& out, const EvalReport& report,
                    const std::vector<std::string>& class_names);
void write_roc_csv(std::ostream& out, const EvalReport& report,
                   const std::vector<std::string>& class_names);

}  // namespace urbanprof
