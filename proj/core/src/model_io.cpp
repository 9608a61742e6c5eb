#include <string>

#include "json_util.hpp"
#include "nbt/errors.hpp"
#include "nbt/model.hpp"

namespace nbt {

namespace {

constexpr const char* kModule = "nbt";
using detail::ordered_json;

std::size_t require_size(const ordered_json& j, const char* key, const std::string& src) {
  const auto& v = detail::require(j, key, kModule, src);
  if (!v.is_number_unsigned()) {
    throw ValidationError(kModule, src + ": '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

std::string model_to_json(const SlotModel& model, const std::string& vector_fingerprint) {
  const ModelConfig& c = model.config();
  ordered_json j;
  j["format_version"] = kModelFormatVersion;
  j["variant"] = to_string(c.variant);
  j["slot"] = model.slot();
  j["D"] = c.word_dim;
  j["L"] = c.filters;
  j["hidden"] = c.hidden;
  j["dropout"] = c.dropout;
  j["squashed_logits"] = c.squashed_logits;
  j["act_merge"] = c.act_merge == ActMerge::kSum ? "sum" : "last";
  j["vector_file_hash"] = vector_fingerprint;
  ordered_json params = ordered_json::object();
  for (const auto& p : model.params()) {
    params[p.name] = ordered_json{{"shape", p.value.shape()}, {"data", p.value.data()}};
  }
  j["parameters"] = std::move(params);
  return j.dump() + "\n";
}

SlotModel model_from_json(std::string_view text, std::string_view source,
                          std::string* vector_fingerprint) {
  const std::string src(source);
  const ordered_json j = detail::parse_json(text, kModule, source);
  if (!j.is_object()) throw ValidationError(kModule, src + ": model file must be an object");
  const auto& version = detail::require(j, "format_version", kModule, src);
  if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion) {
    throw ValidationError(kModule, src + ": unsupported format_version " + version.dump() +
                                       " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  ModelConfig c;
  c.variant = parse_variant(
      detail::require_string(detail::require(j, "variant", kModule, src), kModule, src));
  c.word_dim = require_size(j, "D", src);
  c.filters = require_size(j, "L", src);
  c.hidden = require_size(j, "hidden", src);
  if (j.contains("dropout")) c.dropout = j.at("dropout").get<double>();
  if (j.contains("squashed_logits")) c.squashed_logits = j.at("squashed_logits").get<bool>();
  if (j.contains("act_merge")) {
    c.act_merge = j.at("act_merge").get<std::string>() == "last" ? ActMerge::kLast : ActMerge::kSum;
  }
  const std::string slot =
      detail::require_string(detail::require(j, "slot", kModule, src), kModule, src);
  if (vector_fingerprint != nullptr && j.contains("vector_file_hash")) {
    *vector_fingerprint = j.at("vector_file_hash").get<std::string>();
  }
  const auto& pj = detail::require(j, "parameters", kModule, src);
  ParameterSet params;
  for (const auto& name : SlotModel::parameter_names()) {
    const auto& entry = detail::require(pj, name.c_str(), kModule, src + ": parameters");
    std::vector<std::size_t> shape;
    std::vector<double> data;
    try {
      shape = detail::require(entry, "shape", kModule, src).get<std::vector<std::size_t>>();
      data = detail::require(entry, "data", kModule, src).get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(kModule, src + ": parameter '" + name + "' is malformed");
    }
    try {
      params.add(name, Tensor::from_shape(std::move(shape), std::move(data)));
    } catch (const DimensionError& e) {
      throw ValidationError(kModule, src + ": parameter '" + name + "': " + e.what());
    }
  }
  return SlotModel(slot, c, std::move(params));
}

void save_model(const SlotModel& model, const std::filesystem::path& path,
                const std::string& vector_fingerprint) {
  write_text_file(path, model_to_json(model, vector_fingerprint));
}

SlotModel load_model(const std::filesystem::path& path, std::string* vector_fingerprint) {
  return model_from_json(read_text_file(path), path.string(), vector_fingerprint);
}

}  // namespace nbt
