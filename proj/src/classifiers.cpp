#include "urbanprof/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "urbanprof/csv.hpp"
#include "urbanprof/errors.hpp"

namespace urbanprof {

void Dataset::validate() const {
  if (x.rows() != y.size()) throw DataError("dataset: label count does not match rows");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= class_names.size())
      throw DataError("dataset: label out of range");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = select_rows(x, rows);
  out.class_names = class_names;
  out.y.reserve(rows.size());
  for (std::size_t r : rows) out.y.push_back(y[r]);
  return out;
}

Dataset make_dataset(Matrix x, std::span<const int> labels) {
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  Dataset d;
  d.x = std::move(x);
  for (int label : distinct) d.class_names.push_back("S" + std::to_string(label + 1));
  for (int label : labels)
    d.y.push_back(static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), label) -
                                   distinct.begin()));
  d.validate();
  return d;
}

namespace {

int argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return static_cast<int>(best);
}

std::vector<double> one_hot(int label, std::size_t classes) {
  std::vector<double> s(classes, 0.0);
  s[static_cast<std::size_t>(label)] = 1.0;
  return s;
}

}  // namespace

Prediction knn_classify(const Dataset& train, std::span<const double> x, std::size_t k) {
  const std::size_t n = train.size();
  if (n == 0) throw DataError("kNN: empty training set");
  if (k < 1 || k > n) throw ConfigError("kNN: k must lie in [1, training size]");
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = {squared_distance(train.x.row(i), x), i};
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  Prediction p;
  p.scores.assign(train.class_count(), 0.0);
  for (std::size_t t = 0; t < k; ++t)
    p.scores[static_cast<std::size_t>(train.y[dist[t].second])] += 1.0 / static_cast<double>(k);
  p.label = argmax(p.scores);
  return p;
}

// --- CART -------------------------------------------------------------------

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const TreeParams& params, std::mt19937_64* rng)
      : data_(data), params_(params), rng_(rng), classes_(data.class_count()) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
  };

  std::size_t grow(DecisionTree& tree, std::vector<std::size_t> rows, std::size_t depth) {
    const std::size_t id = tree.nodes_.size();
    tree.nodes_.emplace_back();
    std::vector<double> counts(classes_, 0.0);
    for (std::size_t r : rows) counts[static_cast<std::size_t>(data_.y[r])] += 1.0;
    const double n = static_cast<double>(rows.size());
    {
      auto& node = tree.nodes_[id];
      node.depth = depth;
      node.distribution.resize(classes_);
      for (std::size_t c = 0; c < classes_; ++c) node.distribution[c] = counts[c] / n;
    }
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    const bool depth_capped = params_.max_depth >= 0 && depth >= static_cast<std::size_t>(params_.max_depth);
    if (pure || depth_capped || rows.size() < 2 * std::max<std::size_t>(params_.min_leaf, 1)) return id;

    double sum_sq = 0.0;
    for (double c : counts) sum_sq += c * c;
    const double parent = n - sum_sq / n;
    const Split best = best_split(rows, counts);
    if (!(best.impurity < parent - 1e-12 * n)) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows)
      (data_.x(r, best.feature) <= best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const std::size_t l = grow(tree, std::move(left), depth + 1);
    const std::size_t rr = grow(tree, std::move(right), depth + 1);
    auto& node = tree.nodes_[id];
    node.feature = static_cast<int>(best.feature);
    node.threshold = best.threshold;
    node.left = l;
    node.right = rr;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t q = data_.x.cols();
    std::vector<std::size_t> features(q);
    std::iota(features.begin(), features.end(), 0);
    if (params_.mtry == 0 || params_.mtry >= q || rng_ == nullptr) return features;
    for (std::size_t i = 0; i < params_.mtry; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, q - 1);
      std::swap(features[i], features[pick(*rng_)]);
    }
    features.resize(params_.mtry);
    std::sort(features.begin(), features.end());
    return features;
  }

  Split best_split(const std::vector<std::size_t>& rows, const std::vector<double>& counts) {
    Split best;
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_leaf, 1);
    std::vector<std::size_t> order(rows);
    std::vector<double> left(classes_), right(classes_);
    for (std::size_t f : candidate_features()) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data_.x(a, f) < data_.x(b, f);
      });
      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      double left_sq = 0.0, right_sq = 0.0;
      for (double c : counts) right_sq += c * c;
      double nl = 0.0, nr = static_cast<double>(order.size());
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto c = static_cast<std::size_t>(data_.y[order[i]]);
        left_sq += 2.0 * left[c] + 1.0;
        right_sq -= 2.0 * right[c] - 1.0;
        left[c] += 1.0;
        right[c] -= 1.0;
        nl += 1.0;
        nr -= 1.0;
        const double a = data_.x(order[i], f);
        const double b = data_.x(order[i + 1], f);
        if (!(a < b) || i + 1 < min_leaf || order.size() - i - 1 < min_leaf) continue;
        const double impurity = (nl - left_sq / nl) + (nr - right_sq / nr);
        if (impurity < best.impurity) {
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best = {f, mid, impurity};
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  TreeParams params_;
  std::mt19937_64* rng_;
  std::size_t classes_;
};

DecisionTree DecisionTree::fit(const Dataset& train, const TreeParams& params,
                               std::span<const std::size_t> rows, std::mt19937_64* rng) {
  if (train.size() == 0) throw DataError("decision tree: empty training set");
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  if (idx.empty()) {
    idx.resize(train.size());
    std::iota(idx.begin(), idx.end(), 0);
  }
  return TreeBuilder(train, params, rng).build(std::move(idx));
}

std::span<const double> DecisionTree::predict_scores(std::span<const double> x) const {
  std::size_t id = 0;
  while (nodes_[id].feature >= 0) {
    const auto& node = nodes_[id];
    id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes_[id].distribution;
}

int DecisionTree::predict(std::span<const double> x) const { return argmax(predict_scores(x)); }

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::optional<std::pair<std::size_t, double>> DecisionTree::root_split() const {
  if (nodes_.empty() || nodes_[0].feature < 0) return std::nullopt;
  return std::pair{static_cast<std::size_t>(nodes_[0].feature), nodes_[0].threshold};
}

// --- Random forest ----------------------------------------------------------

RandomForest RandomForest::fit(const Dataset& train, const ForestParams& params) {
  if (params.n_trees < 1) throw ConfigError("random forest needs at least one tree");
  if (train.size() == 0) throw DataError("random forest: empty training set");
  const std::size_t n = train.size();
  const std::size_t q = train.x.cols();
  TreeParams tp{params.max_depth, params.min_leaf,
                params.mtry ? params.mtry
                            : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(q))))};
  RandomForest forest;
  forest.classes_ = train.class_count();
  forest.trees_.resize(params.n_trees);
  const auto trees = static_cast<std::ptrdiff_t>(params.n_trees);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < trees; ++t) {
    std::mt19937_64 rng(params.seed + static_cast<std::uint64_t>(t));
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    forest.trees_[static_cast<std::size_t>(t)] = DecisionTree::fit(train, tp, rows, &rng);
  }
  return forest;
}

std::vector<double> RandomForest::predict_scores(std::span<const double> x) const {
  std::vector<double> scores(classes_, 0.0);
  for (const auto& tree : trees_) {
    const auto s = tree.predict_scores(x);
    for (std::size_t c = 0; c < classes_; ++c) scores[c] += s[c];
  }
  for (double& s : scores) s /= static_cast<double>(trees_.size());
  return scores;
}

int RandomForest::predict(std::span<const double> x) const { return argmax(predict_scores(x)); }

// --- Cross-validation -------------------------------------------------------

std::string model_name(const ModelSpec& spec) {
  struct Visitor {
    std::string operator()(const KnnSpec& s) const { return "knn_k" + std::to_string(s.k); }
    std::string operator()(const TreeSpec&) const { return "decision_tree"; }
    std::string operator()(const ForestSpec&) const { return "random_forest"; }
    std::string operator()(const MajoritySpec&) const { return "majority"; }
    std::string operator()(const RandomSpec&) const { return "random"; }
  };
  return std::visit(Visitor{}, spec);
}

std::vector<std::size_t> assign_folds(std::span<const int> y, std::size_t folds,
                                      std::uint64_t seed, bool& stratified) {
  const std::size_t n = y.size();
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (n < folds) throw DataError("cross-validation: fewer rows than folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[y[i]].push_back(i);
  stratified = std::all_of(by_class.begin(), by_class.end(),
                           [folds](const auto& kv) { return kv.second.size() >= folds; });
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold_of(n);
  std::size_t counter = 0;
  const auto deal = [&](std::vector<std::size_t>& idx) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i : idx) fold_of[i] = counter++ % folds;
  };
  if (stratified) {
    for (auto& [label, idx] : by_class) deal(idx);
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    deal(all);
  }
  return fold_of;
}

CvResult cross_validate(const Dataset& data, const ModelSpec& spec, std::size_t folds,
                        std::uint64_t seed) {
  data.validate();
  const std::size_t n = data.size();
  const std::size_t classes = data.class_count();
  CvResult out;
  out.fold_of = assign_folds(data.y, folds, seed, out.stratified);
  out.predicted.assign(n, 0);
  out.scores = Matrix(n, classes);
  std::mt19937_64 random_rng(std::holds_alternative<RandomSpec>(spec) ? std::get<RandomSpec>(spec).seed : 0);

  double error_sum = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < n; ++i) (out.fold_of[i] == f ? test_rows : train_rows).push_back(i);
    const Dataset train = data.subset(train_rows);

    std::vector<std::vector<double>> scores(test_rows.size());
    if (const auto* s = std::get_if<KnnSpec>(&spec)) {
      const std::size_t k = std::min(s->k, train.size());
      for (std::size_t t = 0; t < test_rows.size(); ++t)
        scores[t] = knn_classify(train, data.x.row(test_rows[t]), k).scores;
    } else if (const auto* s = std::get_if<TreeSpec>(&spec)) {
      const DecisionTree tree = DecisionTree::fit(train, s->params);
      for (std::size_t t = 0; t < test_rows.size(); ++t) {
        const auto sc = tree.predict_scores(data.x.row(test_rows[t]));
        scores[t].assign(sc.begin(), sc.end());
      }
    } else if (const auto* s = std::get_if<ForestSpec>(&spec)) {
      const RandomForest forest = RandomForest::fit(train, s->params);
      for (std::size_t t = 0; t < test_rows.size(); ++t)
        scores[t] = forest.predict_scores(data.x.row(test_rows[t]));
    } else if (std::holds_alternative<MajoritySpec>(spec)) {
      std::vector<double> counts(classes, 0.0);
      for (int label : train.y) counts[static_cast<std::size_t>(label)] += 1.0;
      for (auto& sc : scores) sc = one_hot(argmax(counts), classes);
    } else {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(classes) - 1);
      for (auto& sc : scores) sc = one_hot(pick(random_rng), classes);
    }

    std::size_t correct = 0;
    for (std::size_t t = 0; t < test_rows.size(); ++t) {
      const std::size_t row = test_rows[t];
      out.predicted[row] = argmax(scores[t]);
      std::copy(scores[t].begin(), scores[t].end(), out.scores.row(row).begin());
      if (out.predicted[row] == data.y[row]) ++correct;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(test_rows.size());
    out.fold_accuracy.push_back(acc);
    error_sum += 1.0 - acc;
  }
  out.cv_error = error_sum / static_cast<double>(folds);
  return out;
}

// --- Metrics ----------------------------------------------------------------

EvalReport evaluate(std::span<const int> predicted, const Matrix& scores,
                    std::span<const int> truth, std::size_t class_count) {
  const std::size_t n = truth.size();
  if (predicted.size() != n) throw DataError("evaluate: predictions and truth differ in length");
  if (n == 0) throw DataError("evaluate: no instances");
  if (!scores.empty() && (scores.rows() != n || scores.cols() != class_count))
    throw DataError("evaluate: score matrix has the wrong shape");
  EvalReport r;
  r.n = n;
  r.confusion_counts = Matrix(class_count, class_count);
  for (std::size_t i = 0; i < n; ++i) {
    if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= class_count ||
        static_cast<std::size_t>(predicted[i]) >= class_count)
      throw DataError("evaluate: label out of range");
    r.confusion_counts(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(predicted[i])) += 1.0;
  }
  r.confusion = r.confusion_counts;
  for (double& v : r.confusion.data()) v /= static_cast<double>(n);
  double trace = 0.0;
  for (std::size_t c = 0; c < class_count; ++c) trace += r.confusion_counts(c, c);
  r.overall_acc = trace / static_cast<double>(n);
  r.cv_error = 1.0 - r.overall_acc;

  double sp = 0.0, sr = 0.0, sf = 0.0;
  std::size_t np = 0, nr = 0, nf = 0;
  for (std::size_t c = 0; c < class_count; ++c) {
    double tp = r.confusion_counts(c, c), fp = 0.0, fn = 0.0;
    for (std::size_t o = 0; o < class_count; ++o) {
      if (o == c) continue;
      fp += r.confusion_counts(o, c);
      fn += r.confusion_counts(c, o);
    }
    ClassMetrics m;
    const bool present = tp + fn > 0.0;
    if (present) {
      m.recall = tp / (tp + fn);
      if (tp + fp > 0.0) m.precision = tp / (tp + fp);
      if (m.precision && m.recall)
        m.f_measure = (*m.precision + *m.recall) > 0.0
                          ? 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall)
                          : 0.0;
    }
    if (m.precision) { sp += *m.precision; ++np; }
    if (m.recall) { sr += *m.recall; ++nr; }
    if (m.f_measure) { sf += *m.f_measure; ++nf; }
    r.per_class.push_back(m);
  }
  if (np) r.macro_precision = sp / static_cast<double>(np);
  if (nr) r.macro_recall = sr / static_cast<double>(nr);
  if (nf) r.macro_f = sf / static_cast<double>(nf);

  r.roc.resize(class_count);
  r.auc.resize(class_count);
  if (scores.empty()) return r;
  std::vector<std::size_t> order(n);
  for (std::size_t c = 0; c < class_count; ++c) {
    double positives = 0.0;
    for (int t : truth) positives += (static_cast<std::size_t>(t) == c) ? 1.0 : 0.0;
    const double negatives = static_cast<double>(n) - positives;
    if (positives == 0.0 || negatives == 0.0) continue;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores(a, c) > scores(b, c); });
    auto& curve = r.roc[c];
    curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    double tp = 0.0, fp = 0.0, area = 0.0;
    for (std::size_t i = 0; i < n;) {
      const double threshold = scores(order[i], c);
      while (i < n && scores(order[i], c) == threshold) {
        (static_cast<std::size_t>(truth[order[i]]) == c ? tp : fp) += 1.0;
        ++i;
      }
      const RocPoint p{fp / negatives, tp / positives, threshold};
      area += (p.fpr - curve.back().fpr) * (p.tpr + curve.back().tpr) / 2.0;
      curve.push_back(p);
    }
    r.auc[c] = area;
  }
  return r;
}

EvalReport baseline_random(const Dataset& data, std::uint64_t seed) {
  data.validate();
  if (data.class_count() == 0) throw DataError("baseline: no classes");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(data.class_count()) - 1);
  std::vector<int> predicted(data.size());
  Matrix scores(data.size(), data.class_count());
  for (std::size_t i = 0; i < data.size(); ++i) {
    predicted[i] = pick(rng);
    scores(i, static_cast<std::size_t>(predicted[i])) = 1.0;
  }
  return evaluate(predicted, scores, data.y, data.class_count());
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : "NA"; }

}  // namespace

void write_eval_csv(std::ostream& out, const EvalReport& report,
                    const std::vector<std::string>& class_names) {
  out << "section,key,column,value\n";
  out << "summary,n,," << report.n << '\n';
  out << "summary,overall_acc,," << csv::format_double(report.overall_acc) << '\n';
  out << "summary,cv_error,," << csv::format_double(report.cv_error) << '\n';
  out << "summary,macro_precision,," << opt(report.macro_precision) << '\n';
  out << "summary,macro_recall,," << opt(report.macro_recall) << '\n';
  out << "summary,macro_f,," << opt(report.macro_f) << '\n';
  for (std::size_t a = 0; a < class_names.size(); ++a)
    for (std::size_t b = 0; b < class_names.size(); ++b)
      out << "confusion," << csv::escape(class_names[a]) << ',' << csv::escape(class_names[b]) << ','
          << csv::format_double(report.confusion(a, b)) << '\n';
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    const auto& m = report.per_class[c];
    const auto name = csv::escape(class_names[c]);
    out << "class," << name << ",precision," << opt(m.precision) << '\n';
    out << "class," << name << ",recall," << opt(m.recall) << '\n';
    out << "class," << name << ",f_measure," << opt(m.f_measure) << '\n';
    out << "class," << name << ",auc," << opt(report.auc[c]) << '\n';
  }
}

void write_roc_csv(std::ostream& out, const EvalReport& report,
                   const std::vector<std::string>& class_names) {
  out << "class,fpr,tpr,threshold\n";
  for (std::size_t c = 0; c < class_names.size(); ++c)
    for (const auto& p : report.roc[c])
      out << csv::escape(class_names[c]) << ',' << csv::format_double(p.fpr) << ','
          << csv::format_double(p.tpr) << ','
          << (std::isinf(p.threshold) ? std::string("inf") : csv::format_double(p.threshold)) << '\n';
}

}  // namespace urbanprof
