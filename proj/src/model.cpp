#include "ffd/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ffd/error.hpp"

namespace ffd {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::random_forest: return "random_forest";
    case Family::gradient_boosting: return "gradient_boosting";
    case Family::mlp: return "mlp";
  }
  return "?";
}

Family parse_family(std::string_view s) {
  if (s == "random_forest" || s == "rf") return Family::random_forest;
  if (s == "gradient_boosting" || s == "gbm") return Family::gradient_boosting;
  if (s == "mlp") return Family::mlp;
  throw InputError(fmt::format("unknown model family '{}' (expected random_forest, gradient_boosting or mlp)", s));
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

std::string describe(const ParamValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::string>) return fmt::format("\"{}\"", x);
        else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) return fmt::format("[{}]", fmt::join(x, ", "));
        else return fmt::format("{}", x);
      },
      v);
}

namespace {

enum Kind : unsigned { kBool = 1u << 0, kInt = 1u << 1, kDouble = 1u << 2, kString = 1u << 3, kIntList = 1u << 4 };

struct ParamSchema {
  std::string_view key;
  unsigned kinds;
  ParamValue def;
};

const std::vector<ParamSchema>& schema(Family f) {
  static const std::vector<ParamSchema> rf = {
      {"n_estimators", kInt, std::int64_t{1000}},
      {"criterion", kString, std::string("entropy")},
      {"max_depth", kInt, std::int64_t{5}},
      {"min_samples_split", kInt, std::int64_t{5}},
      {"min_samples_leaf", kInt, std::int64_t{3}},
      {"max_features", kString | kInt | kDouble, std::string("auto")},
      {"bootstrap", kBool, true},
  };
  static const std::vector<ParamSchema> gbm = {
      {"loss", kString, std::string("deviance")},
      {"learning_rate", kDouble | kInt, 0.01},
      {"n_estimators", kInt, std::int64_t{1000}},
      {"subsample", kDouble | kInt, 1.0},
      {"criterion", kString, std::string("squared_error")},
      {"min_samples_split", kInt, std::int64_t{10}},
      {"min_samples_leaf", kInt, std::int64_t{5}},
      {"max_depth", kInt, std::int64_t{5}},
      {"max_features", kString | kInt | kDouble, std::string("auto")},
  };
  static const std::vector<ParamSchema> mlp = {
      {"hidden_layer_sizes", kIntList, std::vector<std::int64_t>{25, 10}},
      {"activation", kString, std::string("relu")},
      {"solver", kString, std::string("adam")},
      {"alpha", kDouble | kInt, 1e-5},
      {"batch_size", kString | kInt, std::string("auto")},
      {"learning_rate", kString, std::string("constant")},
      {"learning_rate_init", kDouble | kInt, 1e-3},
      {"max_iter", kInt, std::int64_t{300}},
      {"tol", kDouble | kInt, 1e-6},
      {"n_iter_no_change", kInt, std::int64_t{10}},
  };
  switch (f) {
    case Family::random_forest: return rf;
    case Family::gradient_boosting: return gbm;
    case Family::mlp: return mlp;
  }
  return rf;
}

unsigned kind_of(const ParamValue& v) { return 1u << v.index(); }

const ParamValue& lookup(const ModelSpec& spec, std::string_view key) {
  auto it = spec.params.find(std::string(key));
  if (it != spec.params.end()) return it->second;
  for (const ParamSchema& s : schema(spec.family))
    if (s.key == key) return s.def;
  throw InputError(fmt::format("{} has no hyperparameter '{}'", to_string(spec.family), key));
}

std::int64_t get_int(const ModelSpec& spec, std::string_view key) { return std::get<std::int64_t>(lookup(spec, key)); }

double get_double(const ModelSpec& spec, std::string_view key) {
  const ParamValue& v = lookup(spec, key);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

const std::string& get_string(const ModelSpec& spec, std::string_view key) {
  return std::get<std::string>(lookup(spec, key));
}

int positive_int(const ModelSpec& spec, std::string_view key, std::int64_t min = 1) {
  const std::int64_t v = get_int(spec, key);
  if (v < min) throw InputError(fmt::format("{}.{} must be at least {}, got {}", to_string(spec.family), key, min, v));
  return static_cast<int>(v);
}

TreeParams tree_params(const ModelSpec& spec, std::size_t n_features) {
  TreeParams t;
  t.criterion = parse_criterion(get_string(spec, "criterion"));
  t.max_depth = static_cast<int>(get_int(spec, "max_depth"));
  t.min_samples_split = positive_int(spec, "min_samples_split", 2);
  t.min_samples_leaf = positive_int(spec, "min_samples_leaf");
  t.max_features = resolve_max_features(lookup(spec, "max_features"), n_features);
  return t;
}

}  // namespace

ModelSpec default_spec(Family family, std::uint64_t seed) {
  ModelSpec spec;
  spec.family = family;
  spec.seed = seed;
  for (const ParamSchema& s : schema(family)) spec.params.emplace(std::string(s.key), s.def);
  return spec;
}

void validate(const ModelSpec& spec) {
  const auto& sch = schema(spec.family);
  for (const auto& [key, value] : spec.params) {
    auto it = std::find_if(sch.begin(), sch.end(), [&](const ParamSchema& s) { return s.key == key; });
    if (it == sch.end())
      throw InputError(fmt::format("unknown hyperparameter '{}' for {}", key, to_string(spec.family)));
    if ((kind_of(value) & it->kinds) == 0)
      throw InputError(fmt::format("hyperparameter {}.{} has the wrong type ({})", to_string(spec.family), key,
                                   describe(value)));
  }
  switch (spec.family) {
    case Family::random_forest:
      if (parse_criterion(get_string(spec, "criterion")) == SplitCriterion::squared_error)
        throw InputError("random_forest.criterion must be entropy or gini");
      positive_int(spec, "n_estimators");
      tree_params(spec, 1);
      break;
    case Family::gradient_boosting: {
      const std::string& loss = get_string(spec, "loss");
      if (loss != "deviance" && loss != "log_loss")
        throw InputError(fmt::format("gradient_boosting.loss '{}' is not supported (deviance)", loss));
      if (parse_criterion(get_string(spec, "criterion")) != SplitCriterion::squared_error)
        throw InputError("gradient_boosting.criterion must be squared_error");
      positive_int(spec, "n_estimators");
      tree_params(spec, 1);
      const double sub = get_double(spec, "subsample");
      if (!(sub > 0 && sub <= 1)) throw InputError("gradient_boosting.subsample must lie in (0, 1]");
      if (!(get_double(spec, "learning_rate") > 0)) throw InputError("gradient_boosting.learning_rate must be positive");
      break;
    }
    case Family::mlp:
      if (get_string(spec, "solver") != "adam") throw InputError("mlp.solver must be adam");
      if (get_string(spec, "learning_rate") != "constant") throw InputError("mlp.learning_rate must be constant");
      mlp_params(spec);
      break;
  }
}

std::size_t resolve_max_features(const ParamValue& v, std::size_t n_features) {
  if (const auto* s = std::get_if<std::string>(&v)) {
    if (*s == "auto" || *s == "sqrt")
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features)))));
    if (*s == "log2")
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(n_features)))));
    if (*s == "all" || *s == "none") return n_features;
    throw InputError(fmt::format("unknown max_features '{}'", *s));
  }
  if (const auto* i = std::get_if<std::int64_t>(&v)) {
    if (*i < 1) throw InputError("max_features must be at least 1");
    return std::min<std::size_t>(static_cast<std::size_t>(*i), n_features);
  }
  if (const auto* d = std::get_if<double>(&v)) {
    if (!(*d > 0 && *d <= 1)) throw InputError("fractional max_features must lie in (0, 1]");
    return std::max<std::size_t>(1, static_cast<std::size_t>(*d * static_cast<double>(n_features)));
  }
  throw InputError("max_features must be a string, an integer or a fraction");
}

ForestParams forest_params(const ModelSpec& spec, std::size_t n_features) {
  ForestParams p;
  p.n_estimators = positive_int(spec, "n_estimators");
  p.tree = tree_params(spec, n_features);
  p.bootstrap = std::get<bool>(lookup(spec, "bootstrap"));
  return p;
}

BoostingParams boosting_params(const ModelSpec& spec, std::size_t n_features) {
  BoostingParams p;
  p.learning_rate = get_double(spec, "learning_rate");
  p.n_estimators = positive_int(spec, "n_estimators");
  p.subsample = get_double(spec, "subsample");
  p.tree = tree_params(spec, n_features);
  return p;
}

MlpParams mlp_params(const ModelSpec& spec) {
  MlpParams p;
  p.hidden_layers.clear();
  for (std::int64_t h : std::get<std::vector<std::int64_t>>(lookup(spec, "hidden_layer_sizes"))) {
    if (h < 1) throw InputError("mlp.hidden_layer_sizes entries must be positive");
    p.hidden_layers.push_back(static_cast<int>(h));
  }
  p.activation = parse_activation(get_string(spec, "activation"));
  p.alpha = get_double(spec, "alpha");
  const ParamValue& batch = lookup(spec, "batch_size");
  if (const auto* s = std::get_if<std::string>(&batch)) {
    if (*s != "auto") throw InputError(fmt::format("mlp.batch_size '{}' must be \"auto\" or an integer", *s));
    p.batch_size = 0;
  } else {
    p.batch_size = static_cast<int>(std::get<std::int64_t>(batch));
    if (p.batch_size < 1) throw InputError("mlp.batch_size must be positive");
  }
  p.learning_rate_init = get_double(spec, "learning_rate_init");
  p.max_iter = positive_int(spec, "max_iter");
  p.tol = get_double(spec, "tol");
  p.n_iter_no_change = positive_int(spec, "n_iter_no_change");
  return p;
}

Prediction make_prediction(const std::array<double, kNumConditions>& probabilities) {
  Prediction p;
  p.probabilities = probabilities;
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumConditions; ++k)
    if (probabilities[k] > probabilities[best]) best = k;
  p.condition = kConditions[best];
  p.fit_probability = probabilities[index_of(Condition::control)];
  return p;
}

TrainedModel::TrainedModel(ModelSpec spec, std::vector<Condition> classes, std::size_t n_features,
                           std::size_t n_train, ModelImpl impl)
    : spec_(std::move(spec)),
      classes_(std::move(classes)),
      n_features_(n_features),
      n_train_(n_train),
      impl_(std::move(impl)) {}

std::array<double, kNumConditions> TrainedModel::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features_)
    throw InputError(fmt::format("feature vector has {} values, model expects {}", x.size(), n_features_));
  for (double v : x)
    if (!std::isfinite(v)) throw InputError("feature vector contains a non-finite value");
  const std::vector<double> local =
      std::visit([&](const auto& m) { return m.predict_proba(x); }, impl_);
  std::array<double, kNumConditions> out{};
  for (std::size_t k = 0; k < classes_.size(); ++k) out[index_of(classes_[k])] = local[k];
  return out;
}

Prediction TrainedModel::predict(std::span<const double> x) const { return make_prediction(predict_proba(x)); }

TrainedModel train(const ModelSpec& spec, std::span<const FeatureVector> samples) {
  validate(spec);
  if (samples.empty()) throw InputError("cannot train on an empty dataset");
  const std::size_t d = samples.front().values.size();
  if (d == 0) throw InputError("feature vectors are empty");

  std::array<bool, kNumConditions> present{};
  for (const FeatureVector& fv : samples) {
    if (fv.values.size() != d)
      throw InputError(fmt::format("sample '{}' has {} features, expected {}", fv.id, fv.values.size(), d));
    for (double v : fv.values)
      if (!std::isfinite(v)) throw InputError(fmt::format("sample '{}' has a non-finite feature", fv.id));
    present[index_of(fv.condition)] = true;
  }
  std::vector<Condition> classes;
  std::array<int, kNumConditions> local_index{};
  for (Condition c : kConditions) {
    if (!present[index_of(c)]) continue;
    local_index[index_of(c)] = static_cast<int>(classes.size());
    classes.push_back(c);
  }
  const int k = static_cast<int>(classes.size());
  if (k < 2 && spec.family != Family::random_forest)
    throw InputError(fmt::format("{} needs at least two classes in the training data", to_string(spec.family)));

  FeatureMatrix x(samples.size(), d);
  std::vector<int> y(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::copy(samples[i].values.begin(), samples[i].values.end(), x.data.begin() + static_cast<std::ptrdiff_t>(i * d));
    y[i] = local_index[index_of(samples[i].condition)];
  }

  ModelImpl impl = [&]() -> ModelImpl {
    switch (spec.family) {
      case Family::random_forest: return fit_forest(x, y, k, forest_params(spec, d), spec.seed);
      case Family::gradient_boosting: return fit_boosting(x, y, k, boosting_params(spec, d), spec.seed);
      case Family::mlp: return fit_mlp(x, y, k, mlp_params(spec), spec.seed);
    }
    throw std::logic_error("unhandled model family");
  }();
  return TrainedModel(spec, std::move(classes), d, samples.size(), std::move(impl));
}

}  // namespace ffd
