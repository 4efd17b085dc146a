#include "ffd/feature_io.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "ffd/error.hpp"

namespace ffd {

using nlohmann::json;

json to_json(const FeatureVector& fv) {
  return json{{"id", fv.id}, {"condition", to_string(fv.condition)}, {"features", fv.values}};
}

FeatureVector feature_vector_from_json(const json& j) {
  FeatureVector fv;
  try {
    fv.id = j.at("id").get<std::string>();
    fv.condition = parse_condition(j.at("condition").get<std::string>());
    fv.values = j.at("features").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("malformed feature record: {}", e.what()));
  }
  if (fv.values.size() != kFeatureCount)
    throw SchemaError(fmt::format("feature record '{}' has {} values, expected {}", fv.id, fv.values.size(),
                                  kFeatureCount));
  return fv;
}

void write_features(const std::filesystem::path& path, const std::vector<FeatureVector>& vectors) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  for (const FeatureVector& fv : vectors) out << to_json(fv).dump() << '\n';
}

std::vector<FeatureVector> read_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open feature file '{}'", path.string()));
  std::vector<FeatureVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    try {
      out.push_back(feature_vector_from_json(j));
    } catch (const SchemaError& e) {
      throw SchemaError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

json feature_layout_json() {
  json slots = json::array();
  for (const FeatureSlot& s : kFeatureLayout)
    slots.push_back({{"name", s.name}, {"begin", s.begin}, {"end", s.end}});
  return json{{"format", "ffd-feature-layout"},
              {"version", 1},
              {"length", kFeatureCount},
              {"signal", "pupil/iris ratio, horizontal axis"},
              {"class_order", {"control", "alcohol", "drug", "sleep"}},
              {"slots", slots}};
}

json to_json(const TimeSeries& s) {
  std::vector<int> mask(s.mask.begin(), s.mask.end());
  return json{{"t0", s.t0}, {"dt", s.dt}, {"values", s.values}, {"mask", mask}};
}

TimeSeries time_series_from_json(const json& j) {
  TimeSeries s;
  s.t0 = j.at("t0").get<double>();
  s.dt = j.at("dt").get<double>();
  s.values = j.at("values").get<std::vector<double>>();
  const auto mask = j.at("mask").get<std::vector<int>>();
  if (mask.size() != s.values.size()) throw SchemaError("time series mask/value length mismatch");
  s.mask.assign(mask.begin(), mask.end());
  if (!(s.dt > 0)) throw SchemaError("time series spacing must be positive");
  return s;
}

json to_json(const Baselines& b) {
  json curves = json::array();
  for (const RepresentativeCurve& c : b) {
    curves.push_back({{"condition", to_string(c.condition)},
                      {"mean_x", to_json(c.mean_x)},
                      {"mean_y", to_json(c.mean_y)},
                      {"line", {{"point", c.line.point}, {"direction", c.line.direction}}},
                      {"mu", c.mu},
                      {"sigma", c.sigma}});
  }
  return json{{"format", "ffd-baselines"}, {"version", 1}, {"curves", curves}};
}

Baselines baselines_from_json(const json& j) {
  Baselines out;
  std::array<bool, kNumConditions> seen{};
  try {
    if (j.at("format").get<std::string>() != "ffd-baselines")
      throw SchemaError("not a baselines file");
    for (const json& c : j.at("curves")) {
      RepresentativeCurve curve;
      curve.condition = parse_condition(c.at("condition").get<std::string>());
      curve.mean_x = time_series_from_json(c.at("mean_x"));
      curve.mean_y = time_series_from_json(c.at("mean_y"));
      curve.line.point = c.at("line").at("point").get<Vec3>();
      curve.line.direction = c.at("line").at("direction").get<Vec3>();
      curve.mu = c.at("mu").get<double>();
      curve.sigma = c.at("sigma").get<double>();
      seen[index_of(curve.condition)] = true;
      out[index_of(curve.condition)] = std::move(curve);
    }
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("malformed baselines: {}", e.what()));
  }
  for (Condition c : kConditions)
    if (!seen[index_of(c)])
      throw SchemaError(fmt::format("baselines lack the '{}' curve", to_string(c)));
  return out;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << j.dump(2) << '\n';
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
}

void write_baselines(const std::filesystem::path& path, const Baselines& b) { write_json_file(path, to_json(b)); }

Baselines read_baselines(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw InputError(fmt::format("baseline file '{}' not found; run `ffd baseline` first", path.string()));
  return baselines_from_json(read_json_file(path));
}

}  // namespace ffd
