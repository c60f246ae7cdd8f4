#include "run_config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "sgt/error.hpp"
#include "sgt/report.hpp"

namespace sgt::cli {
namespace {

constexpr const char* kModule = "cli";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::string where) : where_(std::move(where)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& message, Error::Kind kind = Error::Kind::kUsage) const {
    throw Error(kModule, fmt::format("{}: key '{}': {}", where_, key, message), kind);
  }

  std::size_t size(const std::string& key, const std::string& v) const {
    std::size_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) fail(key, fmt::format("expected a non-negative integer, got '{}'", v));
    return out;
  }

  double real(const std::string& key, const std::string& v) const {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    fail(key, fmt::format("expected a number, got '{}'", v));
  }

  bool boolean(const std::string& key, const std::string& v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, fmt::format("expected true or false, got '{}'", v));
  }

  std::vector<double> reals(const std::string& key, const std::string& v) const {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(real(key, item));
    return out;
  }

  std::vector<std::size_t> sizes(const std::string& key, const std::string& v) const {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(v)) out.push_back(size(key, item));
    return out;
  }

 private:
  std::string where_;
};

}  // namespace

std::string RunConfig::hash() const {
  std::string canonical;
  for (const auto& [k, v] : entries)
    if (k != "seed") canonical += k + "=" + v + "\n";
  return fnv1a_hex(canonical);
}

std::string RunConfig::stem(const std::string& prefix) const { return fmt::format("{}_{}_s{}", prefix, hash(), seed); }

const SplitPaths& RunConfig::split(const std::string& name) const {
  const SplitPaths* s = name == "train" ? &train : name == "dev" ? &dev : name == "test" ? &test : nullptr;
  if (!s) throw Error(kModule, fmt::format("unknown split '{}' (expected train, dev or test)", name), Error::Kind::kUsage);
  if (!s->present()) {
    throw Error(kModule, fmt::format("split '{}' is not configured (set data.{}_conllu and data.{}_annotations)", name,
                                     name, name),
                Error::Kind::kUsage);
  }
  return *s;
}

std::string RunConfig::resolved_eval_split() const {
  if (!eval_split.empty()) return eval_split;
  return dev.present() ? "dev" : "train";
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir, const std::string& source_name) {
  RunConfig config;
  Parser parse(source_name);
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : (base_dir / p).lexically_normal();
  };
  auto existing = [&](const std::string& key, const std::string& v) {
    auto p = resolve(v);
    if (!std::filesystem::exists(p)) parse.fail(key, fmt::format("path does not exist: {}", p.string()), Error::Kind::kData);
    return p;
  };

  using Handler = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Handler> handlers = {
      {"data.train_conllu", [&](auto& k, auto& v) { config.train.conllu = existing(k, v); }},
      {"data.train_annotations", [&](auto& k, auto& v) { config.train.annotations = existing(k, v); }},
      {"data.dev_conllu", [&](auto& k, auto& v) { config.dev.conllu = existing(k, v); }},
      {"data.dev_annotations", [&](auto& k, auto& v) { config.dev.annotations = existing(k, v); }},
      {"data.test_conllu", [&](auto& k, auto& v) { config.test.conllu = existing(k, v); }},
      {"data.test_annotations", [&](auto& k, auto& v) { config.test.annotations = existing(k, v); }},
      {"data.vectors", [&](auto& k, auto& v) { config.vectors = existing(k, v); }},
      {"data.scheme",
       [&](auto& k, auto& v) {
         try {
           config.scheme = LabelScheme::by_name(v).name();
         } catch (const Error& e) {
           parse.fail(k, e.what());
         }
       }},
      {"encoder.backend",
       [&](auto& k, auto& v) {
         try {
           config.encoder.backend = parse_encoder_backend(v);
         } catch (const Error& e) {
           parse.fail(k, e.what());
         }
       }},
      {"encoder.token_width", [&](auto& k, auto& v) { config.encoder.token_width = parse.size(k, v); }},
      {"model.width", [&](auto& k, auto& v) { config.model.width = parse.size(k, v); }},
      {"model.layers", [&](auto& k, auto& v) { config.model.layers = parse.size(k, v); }},
      {"model.heads", [&](auto& k, auto& v) { config.model.heads = parse.size(k, v); }},
      {"model.init_scale", [&](auto& k, auto& v) { config.model.init_scale = parse.real(k, v); }},
      {"encoder.init_scale", [&](auto& k, auto& v) { config.encoder.init_scale = parse.real(k, v); }},
      {"model.relation_width", [&](auto& k, auto& v) { config.model.relation_width = parse.size(k, v); }},
      {"train.epochs", [&](auto& k, auto& v) { config.training.epochs = parse.size(k, v); }},
      {"train.warmup_epochs", [&](auto& k, auto& v) { config.training.warmup_epochs = parse.size(k, v); }},
      {"train.learning_rate", [&](auto& k, auto& v) { config.training.learning_rate = parse.real(k, v); }},
      {"train.batch_size", [&](auto& k, auto& v) { config.training.batch_size = parse.size(k, v); }},
      {"train.schedule", [&](auto& k, auto& v) { config.training.schedule = parse.boolean(k, v); }},
      {"train.warmup_fraction", [&](auto& k, auto& v) { config.training.warmup_fraction = parse.real(k, v); }},
      {"train.max_grad_norm", [&](auto& k, auto& v) { config.training.max_grad_norm = parse.real(k, v); }},
      {"train.event_weights",
       [&](auto& k, auto& v) {
         const auto w = parse.reals(k, v);
         if (w.size() != 2) parse.fail(k, "expected two values: non-event, event");
         config.training.event_weights = std::array<double, 2>{w[0], w[1]};
       }},
      {"train.label_weights", [&](auto& k, auto& v) { config.training.label_weights = parse.reals(k, v); }},
      {"grid.learning_rates", [&](auto& k, auto& v) { config.grid.learning_rates = parse.reals(k, v); }},
      {"grid.batch_sizes", [&](auto& k, auto& v) { config.grid.batch_sizes = parse.sizes(k, v); }},
      {"grid.layers", [&](auto& k, auto& v) { config.grid.layers = parse.sizes(k, v); }},
      {"grid.heads", [&](auto& k, auto& v) { config.grid.heads = parse.sizes(k, v); }},
      {"eval.split",
       [&](auto& k, auto& v) {
         if (v != "train" && v != "dev" && v != "test") parse.fail(k, "expected train, dev or test");
         config.eval_split = v;
       }},
      {"analyze.top_k",
       [&](auto& k, auto& v) {
         config.top_k = parse.size(k, v);
         if (config.top_k == 0) parse.fail(k, "must be positive");
       }},
      {"seed", [&](auto& k, auto& v) { config.seed = parse.size(k, v); }},
      {"output.dir", [&](auto&, auto& v) { config.output_dir = resolve(v); }},
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(kModule, fmt::format("{}:{}: expected 'key = value'", source_name, lineno), Error::Kind::kUsage);
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = handlers.find(key);
    if (it == handlers.end()) {
      throw Error(kModule, fmt::format("{}:{}: unknown key '{}'", source_name, lineno, key), Error::Kind::kUsage);
    }
    if (config.entries.contains(key)) {
      throw Error(kModule, fmt::format("{}:{}: duplicate key '{}'", source_name, lineno, key), Error::Kind::kUsage);
    }
    if (value.empty()) parse.fail(key, "empty value");
    it->second(key, value);
    config.entries[key] = value;
  }

  for (const char* key : {"data.train_conllu", "data.train_annotations", "output.dir"})
    if (!config.entries.contains(key)) parse.fail(key, "required key missing");
  for (const char* split : {"dev", "test"}) {
    const bool c = config.entries.contains(fmt::format("data.{}_conllu", split));
    const bool a = config.entries.contains(fmt::format("data.{}_annotations", split));
    if (c != a) parse.fail(fmt::format("data.{}_{}", split, c ? "annotations" : "conllu"), "must be given together");
  }
  if (config.encoder.backend == EncoderBackend::kPrecomputed && config.vectors.empty()) {
    parse.fail("data.vectors", "required by encoder.backend = precomputed");
  }
  if (config.eval_split == "dev" && !config.dev.present()) parse.fail("eval.split", "dev split not configured");
  if (config.eval_split == "test" && !config.test.present()) parse.fail("eval.split", "test split not configured");
  try {
    config.training.validate();
  } catch (const Error& e) {
    throw Error(kModule, fmt::format("{}: {}", source_name, e.what()), Error::Kind::kUsage);
  }
  config.training.seed = config.seed;
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(kModule, fmt::format("cannot open config file {}", path.string()), Error::Kind::kData);
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_run_config(in, base, path.string());
}

}  // namespace sgt::cli
