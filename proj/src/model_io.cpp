#include "ffd/model_io.hpp"

#include <fstream>

#include <fmt/format.h>

#include "ffd/error.hpp"
#include "ffd/feature_io.hpp"

namespace ffd {

using nlohmann::json;

json to_json(const ParamValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

ParamValue param_from_json(const json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    std::vector<std::int64_t> out;
    for (const json& e : j) {
      if (!e.is_number_integer()) throw InputError(fmt::format("list hyperparameters must hold integers: {}", j.dump()));
      out.push_back(e.get<std::int64_t>());
    }
    return out;
  }
  throw InputError(fmt::format("unsupported hyperparameter value {}", j.dump()));
}

json to_json(const ModelSpec& spec) {
  json params = json::object();
  for (const auto& [k, v] : spec.params) params[k] = to_json(v);
  return json{{"family", to_string(spec.family)}, {"seed", spec.seed}, {"params", params}};
}

namespace {

ModelSpec spec_with_overrides(Family family, std::uint64_t seed, const json& params) {
  ModelSpec spec = default_spec(family, seed);
  if (!params.is_object()) throw InputError(fmt::format("{} parameters must be a JSON object", to_string(family)));
  for (const auto& [k, v] : params.items()) spec.params[k] = param_from_json(v);
  validate(spec);
  return spec;
}

}  // namespace

ModelSpec spec_from_json(const json& j) {
  try {
    const Family family = parse_family(j.at("family").get<std::string>());
    const std::uint64_t seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
    return spec_with_overrides(family, seed, j.contains("params") ? j.at("params") : json::object());
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("malformed model spec: {}", e.what()));
  }
}

ModelSpec spec_from_config(const json& models_section, Family family, std::uint64_t seed) {
  const std::string key(to_string(family));
  if (!models_section.is_object() || !models_section.contains(key)) return default_spec(family, seed);
  return spec_with_overrides(family, seed, models_section.at(key));
}

json default_models_config() {
  json out = json::object();
  for (Family f : kFamilies) out[std::string(to_string(f))] = to_json(default_spec(f)).at("params");
  return out;
}

namespace {

json tree_to_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const TreeNode& n : t.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
  return nodes;
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree t;
  for (const json& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<int>();
    node.right = n.at(3).get<int>();
    node.value = n.at(4).get<std::vector<double>>();
    t.nodes.push_back(std::move(node));
  }
  const auto size = static_cast<int>(t.nodes.size());
  for (const TreeNode& n : t.nodes) {
    if (n.is_leaf() ? n.value.empty() : (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size))
      throw SchemaError("corrupt tree node");
  }
  if (t.nodes.empty()) throw SchemaError("empty tree");
  return t;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) r[static_cast<std::size_t>(c)] = m(i, c);
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw SchemaError("empty weight matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw SchemaError("ragged weight matrix");
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json impl_to_json(const ModelImpl& impl) {
  if (const auto* f = std::get_if<ForestModel>(&impl)) {
    json trees = json::array();
    for (const DecisionTree& t : f->trees) trees.push_back(tree_to_json(t));
    return json{{"n_classes", f->n_classes}, {"trees", trees}};
  }
  if (const auto* b = std::get_if<BoostingModel>(&impl)) {
    json stages = json::array();
    for (const auto& stage : b->stages) {
      json per_class = json::array();
      for (const DecisionTree& t : stage) per_class.push_back(tree_to_json(t));
      stages.push_back(std::move(per_class));
    }
    return json{{"n_classes", b->n_classes},          {"learning_rate", b->learning_rate}, {"init", b->init},
                {"train_deviance", b->train_deviance}, {"stages", stages}};
  }
  const auto& m = std::get<MlpModel>(impl);
  json layers = json::array();
  for (std::size_t l = 0; l < m.weights.size(); ++l)
    layers.push_back({{"weights", matrix_to_json(m.weights[l])}, {"bias", vector_to_json(m.biases[l])}});
  return json{{"activation", to_string(m.activation)},
              {"input_mean", vector_to_json(m.input_mean)},
              {"input_scale", vector_to_json(m.input_scale)},
              {"loss_curve", m.loss_curve},
              {"layers", layers}};
}

ModelImpl impl_from_json(Family family, const json& j) {
  switch (family) {
    case Family::random_forest: {
      ForestModel f;
      f.n_classes = j.at("n_classes").get<int>();
      for (const json& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
      if (f.trees.empty()) throw SchemaError("forest without trees");
      return f;
    }
    case Family::gradient_boosting: {
      BoostingModel b;
      b.n_classes = j.at("n_classes").get<int>();
      b.learning_rate = j.at("learning_rate").get<double>();
      b.init = j.at("init").get<std::vector<double>>();
      b.train_deviance = j.at("train_deviance").get<std::vector<double>>();
      for (const json& stage : j.at("stages")) {
        std::vector<DecisionTree> trees;
        for (const json& t : stage) trees.push_back(tree_from_json(t));
        if (trees.size() != static_cast<std::size_t>(b.n_classes)) throw SchemaError("boosting stage size mismatch");
        b.stages.push_back(std::move(trees));
      }
      if (b.init.size() != static_cast<std::size_t>(b.n_classes)) throw SchemaError("boosting prior size mismatch");
      return b;
    }
    case Family::mlp: {
      MlpModel m;
      m.activation = parse_activation(j.at("activation").get<std::string>());
      m.input_mean = vector_from_json(j.at("input_mean"));
      m.input_scale = vector_from_json(j.at("input_scale"));
      m.loss_curve = j.at("loss_curve").get<std::vector<double>>();
      for (const json& layer : j.at("layers")) {
        m.weights.push_back(matrix_from_json(layer.at("weights")));
        m.biases.push_back(vector_from_json(layer.at("bias")));
      }
      if (m.weights.empty()) throw SchemaError("network without layers");
      Eigen::Index fan_in = m.input_mean.size();
      for (std::size_t l = 0; l < m.weights.size(); ++l) {
        if (m.weights[l].rows() != fan_in || m.biases[l].size() != m.weights[l].cols())
          throw SchemaError("inconsistent layer shapes");
        fan_in = m.weights[l].cols();
      }
      return m;
    }
  }
  throw std::logic_error("unhandled model family");
}

}  // namespace

json to_json(const TrainedModel& model) {
  std::vector<std::string> classes;
  for (Condition c : model.classes()) classes.emplace_back(to_string(c));
  return json{{"format", "ffd-model"},
              {"version", kModelFormatVersion},
              {"spec", to_json(model.spec())},
              {"classes", classes},
              {"n_features", model.n_features()},
              {"n_train", model.n_train()},
              {"model", impl_to_json(model.impl())}};
}

TrainedModel model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "ffd-model") throw SchemaError("not a model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw SchemaError(fmt::format("unsupported model format version {} (expected {})", version, kModelFormatVersion));
    ModelSpec spec = spec_from_json(j.at("spec"));
    std::vector<Condition> classes;
    for (const json& c : j.at("classes")) classes.push_back(parse_condition(c.get<std::string>()));
    ModelImpl impl = impl_from_json(spec.family, j.at("model"));
    return TrainedModel(std::move(spec), std::move(classes), j.at("n_features").get<std::size_t>(),
                        j.at("n_train").get<std::size_t>(), std::move(impl));
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("malformed model file: {}", e.what()));
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write model '{}'", path.string()));
  out << to_json(model).dump() << '\n';
}

TrainedModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError(fmt::format("model file '{}' not found", path.string()));
  return model_from_json(read_json_file(path));
}

}  // namespace ffd
