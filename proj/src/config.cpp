#include "semcom/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "semcom/channel.hpp"
#include "semcom/error.hpp"
#include "semcom/rng.hpp"

namespace semcom {

using nlohmann::json;

namespace {

json snr_to_json(double snr) {
  if (std::isinf(snr)) return snr > 0 ? "inf" : "-inf";
  return snr;
}

// Uniform profiles collapse to a scalar so they stay valid if n_slots changes.
json thresholds_to_json(const ThresholdProfile& p) {
  if (!p.gamma.empty() &&
      std::all_of(p.gamma.begin(), p.gamma.end(),
                  [&](const auto& g) { return g == p.gamma.front(); })) {
    if (p.gamma.front()) return *p.gamma.front();
    return "never";
  }
  json arr = json::array();
  for (const auto& g : p.gamma) {
    if (g) {
      arr.push_back(*g);
    } else {
      arr.push_back("never");
    }
  }
  return arr;
}

json features_to_json(const FeatureExtractor& fe) {
  json filters = json::array();
  for (auto f : fe.filters) {
    filters.push_back(f == FeatureFilter::average           ? "average"
                      : f == FeatureFilter::diff_horizontal ? "diff_horizontal"
                                                            : "diff_vertical");
  }
  return {{"scales", fe.scales}, {"filters", filters}, {"weights", fe.weights}};
}

// Reads typed fields from one JSON object, recording problems instead of
// throwing so every violation is reported at once.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix,
              std::vector<std::string>& problems)
      : obj_(obj), prefix_(std::move(prefix)), problems_(problems) {
    if (!obj_.is_object()) fail("", "expected an object");
  }

  ~FieldReader() {
    if (!obj_.is_object()) return;
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.count(key)) fail(key, "unknown key");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.is_object() && obj_.contains(key) && !obj_[key].is_null();
  }

  const json* raw(const std::string& key) {
    return has(key) ? &obj_[key] : nullptr;
  }

  static bool non_negative_integer(const json& v) {
    return v.is_number_unsigned() ||
           (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  }

  void get(const std::string& key, std::size_t& out) {
    if (const json* v = raw(key)) {
      if (non_negative_integer(*v)) {
        out = v->get<std::size_t>();
      } else {
        fail(key, "expected a non-negative integer");
      }
    }
  }

  void get(const std::string& key, std::uint64_t& out, int) {
    if (const json* v = raw(key)) {
      if (non_negative_integer(*v)) {
        out = v->get<std::uint64_t>();
      } else {
        fail(key, "expected a non-negative integer");
      }
    }
  }

  void get(const std::string& key, std::uint32_t& out) {
    std::size_t tmp = out;
    get(key, tmp);
    out = static_cast<std::uint32_t>(tmp);
  }

  void get(const std::string& key, double& out) {
    if (const json* v = raw(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        fail(key, "expected a number");
      }
    }
  }

  // Number, or "inf"/"-inf".
  void get_snr(const std::string& key, double& out) {
    if (const json* v = raw(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else if (v->is_string() && (*v == "inf" || *v == "+inf")) {
        out = kInfiniteSnr;
      } else if (v->is_string() && *v == "-inf") {
        out = -kInfiniteSnr;
      } else {
        fail(key, "expected a number or \"inf\"");
      }
    }
  }

  void get(const std::string& key, bool& out) {
    if (const json* v = raw(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        fail(key, "expected a boolean");
      }
    }
  }

  void get(const std::string& key, std::string& out) {
    if (const json* v = raw(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        fail(key, "expected a string");
      }
    }
  }

  template <typename Parse, typename T>
  void get_enum(const std::string& key, T& out, Parse parse) {
    std::string s;
    if (!has(key)) return;
    get(key, s);
    if (!obj_[key].is_string()) return;
    try {
      out = parse(s);
    } catch (const InvalidArgument& e) {
      fail(key, e.what());
    }
  }

  void fail(const std::string& key, const std::string& what) {
    problems_.push_back(name(key) + ": " + what);
  }

  std::string name(const std::string& key) const {
    if (key.empty()) return prefix_.empty() ? "<root>" : prefix_;
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

void read_thresholds(const json& v, std::size_t n_slots, ThresholdProfile& out,
                     std::vector<std::string>& problems) {
  if (v.is_number()) {
    out = ThresholdProfile::uniform(n_slots, v.get<double>());
  } else if (v.is_string() && v == "never") {
    out = ThresholdProfile::never(n_slots);
  } else if (v.is_string() && v == "face_default") {
    out = ThresholdProfile::face_default(n_slots);
  } else if (v.is_array()) {
    out.gamma.clear();
    for (const auto& e : v) {
      if (e.is_number()) {
        out.gamma.emplace_back(e.get<double>());
      } else if (e.is_string() && e == "never") {
        out.gamma.emplace_back(std::nullopt);
      } else {
        problems.push_back("thresholds: entries must be numbers or \"never\"");
        return;
      }
    }
  } else {
    problems.push_back(
        "thresholds: expected a number, \"never\", \"face_default\" or an array");
  }
}

void read_features(const json& v, FeatureExtractor& fe,
                   std::vector<std::string>& problems) {
  FieldReader r(v, "inversion.features", problems);
  if (const json* s = r.raw("scales")) {
    if (s->is_array() && std::all_of(s->begin(), s->end(), [](const json& e) {
          return FieldReader::non_negative_integer(e);
        })) {
      fe.scales = s->get<std::vector<std::size_t>>();
    } else {
      r.fail("scales", "expected an array of positive integers");
    }
  }
  if (const json* f = r.raw("filters")) {
    fe.filters.clear();
    bool ok = f->is_array();
    if (ok) {
      for (const auto& e : *f) {
        if (e == "average") {
          fe.filters.push_back(FeatureFilter::average);
        } else if (e == "diff_horizontal") {
          fe.filters.push_back(FeatureFilter::diff_horizontal);
        } else if (e == "diff_vertical") {
          fe.filters.push_back(FeatureFilter::diff_vertical);
        } else {
          ok = false;
        }
      }
    }
    if (!ok) r.fail("filters", "expected average/diff_horizontal/diff_vertical");
  }
  if (const json* w = r.raw("weights")) {
    if (w->is_array() && std::all_of(w->begin(), w->end(),
                                     [](const json& e) { return e.is_number(); })) {
      fe.weights = w->get<std::vector<double>>();
    } else {
      r.fail("weights", "expected an array of numbers");
    }
  }
}

// Objects merge key by key; everything else replaces.
void merge_into(json& base, const json& patch) {
  if (!base.is_object() || !patch.is_object()) {
    base = patch;
    return;
  }
  for (const auto& [key, value] : patch.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object()) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

}  // namespace

SimulationConfig SimulationConfig::full_scale() {
  SimulationConfig cfg;
  cfg.latent = {28, 512};
  cfg.cache_capacity = 50;
  cfg.image = {3, 512, 512};
  cfg.thresholds = ThresholdProfile::face_default(28);
  return cfg;
}

void SimulationConfig::validate() const {
  std::vector<std::string> problems;
  if (latent.n_slots == 0) problems.push_back("n_slots: must be positive");
  if (latent.slot_len == 0 || latent.slot_len % 2 != 0) {
    problems.push_back("slot_len: must be positive and even");
  }
  if (cache_capacity == 0) problems.push_back("cache_capacity: must be positive");
  if (image.channels == 0 || image.height == 0 || image.width == 0) {
    problems.push_back("image: dimensions must be positive");
  }
  if (thresholds.gamma.size() != latent.n_slots) {
    problems.push_back("thresholds: expected " + std::to_string(latent.n_slots) +
                       " entries, found " +
                       std::to_string(thresholds.gamma.size()));
  }
  for (const auto& g : thresholds.gamma) {
    if (g && !(*g >= -1.0 && *g <= 1.0)) {
      problems.push_back("thresholds: values must lie in [-1, 1]");
      break;
    }
  }
  if (std::isnan(snr_db)) problems.push_back("channel.snr_db: NaN");
  try {
    side_channel.validate();
  } catch (const InvalidArgument& e) {
    problems.push_back(e.what());
  }
  try {
    inversion.validate();
  } catch (const InvalidArgument& e) {
    problems.push_back(e.what());
  }
  if (num_images < 1) problems.push_back("num_images: must be >= 1");
  if (report_window < 1) problems.push_back("report_window: must be >= 1");
  if (generator.kind == GeneratorKind::mlp) {
    for (std::size_t h : generator.hidden) {
      if (h == 0) problems.push_back("generator.hidden: widths must be positive");
    }
  }
  if (source.kind == SourceSpec::Kind::synthetic) {
    try {
      source.synthetic.validate();
    } catch (const InvalidArgument& e) {
      problems.push_back(e.what());
    }
  } else if (source.dataset_path.empty()) {
    problems.push_back("source.dataset_path: required for dataset sources");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

json to_json(const SimulationConfig& cfg) {
  json gen = {{"kind", std::string(to_string(cfg.generator.kind))},
              {"hidden", cfg.generator.hidden},
              {"seed", nullptr},
              {"weights", cfg.generator.weights}};
  if (cfg.generator.seed) gen["seed"] = *cfg.generator.seed;
  const auto& inv = cfg.inversion;
  return {
      {"n_slots", cfg.latent.n_slots},
      {"slot_len", cfg.latent.slot_len},
      {"cache_capacity", cfg.cache_capacity},
      {"image",
       {{"channels", cfg.image.channels},
        {"height", cfg.image.height},
        {"width", cfg.image.width}}},
      {"generator", gen},
      {"thresholds", thresholds_to_json(cfg.thresholds)},
      {"channel", {{"snr_db", snr_to_json(cfg.snr_db)}}},
      {"side_channel",
       {{"code_rate", cfg.side_channel.code_rate},
        {"bits_per_symbol", cfg.side_channel.bits_per_symbol},
        {"success_prob", cfg.side_channel.success_prob},
        {"sample_retransmissions", cfg.side_channel.sample_retransmissions}}},
      {"inversion",
       {{"lambda1", inv.lambda1},
        {"lambda2", inv.lambda2},
        {"iterations", inv.iterations},
        {"step_size", inv.step_size},
        {"momentum_decay_1", inv.momentum_decay_1},
        {"momentum_decay_2", inv.momentum_decay_2},
        {"epsilon", inv.epsilon},
        {"noise_mode", std::string(to_string(inv.noise_mode))},
        {"init", std::string(to_string(inv.init))},
        {"init_std", inv.init_std},
        {"loss", std::string(to_string(inv.loss))},
        {"features", features_to_json(inv.features)}}},
      {"num_images", cfg.num_images},
      {"source",
       {{"kind", cfg.source.kind == SourceSpec::Kind::synthetic ? "synthetic"
                                                                : "dataset"},
        {"prototypes_per_slot", cfg.source.synthetic.prototypes_per_slot},
        {"reuse_prob", cfg.source.synthetic.reuse_prob},
        {"perturbation_std", cfg.source.synthetic.perturbation_std},
        {"dataset_path", cfg.source.dataset_path}}},
      {"master_seed", cfg.master_seed},
      {"mode", cfg.mode == SimulationMode::latent_only ? "latent_only"
                                                       : "full_inversion"},
      {"report_window", cfg.report_window},
      {"resume_from", cfg.resume_from}};
}

SimulationConfig config_from_json(const json& doc) {
  SimulationConfig cfg;
  std::vector<std::string> problems;
  {
    FieldReader r(doc, "", problems);
    r.get("n_slots", cfg.latent.n_slots);
    r.get("slot_len", cfg.latent.slot_len);
    r.get("cache_capacity", cfg.cache_capacity);
    if (const json* img = r.raw("image")) {
      FieldReader ir(*img, "image", problems);
      ir.get("channels", cfg.image.channels);
      ir.get("height", cfg.image.height);
      ir.get("width", cfg.image.width);
    }
    if (const json* gen = r.raw("generator")) {
      FieldReader gr(*gen, "generator", problems);
      gr.get_enum("kind", cfg.generator.kind, generator_kind_from_string);
      if (const json* h = gr.raw("hidden")) {
        if (h->is_array() && std::all_of(h->begin(), h->end(), [](const json& e) {
              return FieldReader::non_negative_integer(e);
            })) {
          cfg.generator.hidden = h->get<std::vector<std::size_t>>();
        } else {
          gr.fail("hidden", "expected an array of positive integers");
        }
      }
      std::uint64_t seed = 0;
      if (gr.has("seed")) {
        gr.get("seed", seed, 0);
        cfg.generator.seed = seed;
      }
      gr.get("weights", cfg.generator.weights);
    }
    // Thresholds depend on n_slots, read after it.
    cfg.thresholds = ThresholdProfile::uniform(cfg.latent.n_slots, 0.9);
    if (const json* t = r.raw("thresholds")) {
      read_thresholds(*t, cfg.latent.n_slots, cfg.thresholds, problems);
    }
    if (const json* ch = r.raw("channel")) {
      FieldReader cr(*ch, "channel", problems);
      cr.get_snr("snr_db", cfg.snr_db);
    }
    if (const json* sc = r.raw("side_channel")) {
      FieldReader sr(*sc, "side_channel", problems);
      sr.get("code_rate", cfg.side_channel.code_rate);
      sr.get("bits_per_symbol", cfg.side_channel.bits_per_symbol);
      sr.get("success_prob", cfg.side_channel.success_prob);
      sr.get("sample_retransmissions", cfg.side_channel.sample_retransmissions);
    }
    if (const json* inv = r.raw("inversion")) {
      FieldReader vr(*inv, "inversion", problems);
      auto& ic = cfg.inversion;
      vr.get("lambda1", ic.lambda1);
      vr.get("lambda2", ic.lambda2);
      vr.get("iterations", ic.iterations);
      vr.get("step_size", ic.step_size);
      vr.get("momentum_decay_1", ic.momentum_decay_1);
      vr.get("momentum_decay_2", ic.momentum_decay_2);
      vr.get("epsilon", ic.epsilon);
      vr.get_enum("noise_mode", ic.noise_mode, noise_mode_from_string);
      vr.get_enum("init", ic.init, init_mode_from_string);
      vr.get("init_std", ic.init_std);
      vr.get_enum("loss", ic.loss, loss_kind_from_string);
      if (const json* f = vr.raw("features")) read_features(*f, ic.features, problems);
    }
    r.get("num_images", cfg.num_images);
    if (const json* src = r.raw("source")) {
      FieldReader sr(*src, "source", problems);
      sr.get_enum("kind", cfg.source.kind, [](std::string_view s) {
        if (s == "synthetic") return SourceSpec::Kind::synthetic;
        if (s == "dataset") return SourceSpec::Kind::dataset;
        throw InvalidArgument("expected \"synthetic\" or \"dataset\"");
      });
      sr.get("prototypes_per_slot", cfg.source.synthetic.prototypes_per_slot);
      sr.get("reuse_prob", cfg.source.synthetic.reuse_prob);
      sr.get("perturbation_std", cfg.source.synthetic.perturbation_std);
      sr.get("dataset_path", cfg.source.dataset_path);
    }
    r.get("master_seed", cfg.master_seed, 0);
    r.get_enum("mode", cfg.mode, [](std::string_view s) {
      if (s == "latent_only") return SimulationMode::latent_only;
      if (s == "full_inversion") return SimulationMode::full_inversion;
      throw InvalidArgument("expected \"latent_only\" or \"full_inversion\"");
    });
    r.get("report_window", cfg.report_window);
    r.get("resume_from", cfg.resume_from);
  }
  cfg.inversion.snr_db = cfg.snr_db;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

namespace {

json apply_overrides_collect(json doc, const std::vector<std::string>& overrides,
                             std::vector<std::string>& problems) {
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      problems.push_back(ov + ": expected key=value");
      continue;
    }
    const std::string key = ov.substr(0, eq);
    const std::string text = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    json* node = &doc;
    std::size_t start = 0;
    bool ok = true;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot - start);
      if (!node->is_object() || !node->contains(part)) {
        problems.push_back(key + ": unknown key");
        ok = false;
        break;
      }
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    if (ok) *node = value;
  }
  return doc;
}

}  // namespace

json apply_overrides(json doc, const std::vector<std::string>& overrides) {
  std::vector<std::string> problems;
  doc = apply_overrides_collect(std::move(doc), overrides, problems);
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return doc;
}

SimulationConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides,
                             std::optional<std::uint64_t> seed_override) {
  json user = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"config: cannot open '" + path + "'"});
    try {
      user = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError({std::string("config: ") + e.what()});
    }
    if (!user.is_object()) throw ConfigError({"config: expected a JSON object"});
  }
  // Unknown keys in the file are reported by config_from_json; merging onto
  // the defaults first makes every known key addressable by overrides.
  json doc = to_json(SimulationConfig{});
  merge_into(doc, user);
  std::vector<std::string> problems;
  doc = apply_overrides_collect(std::move(doc), overrides, problems);
  if (seed_override) doc["master_seed"] = *seed_override;
  try {
    SimulationConfig cfg = config_from_json(doc);
    if (problems.empty()) return cfg;
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  throw ConfigError(std::move(problems));
}

std::string config_hash(const SimulationConfig& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

}  // namespace semcom
