#include "l2t/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "l2t/error.hpp"

namespace l2t::cli {
namespace {

struct KeySpec {
  std::string name;
  bool is_bool = false;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError(key + ": cannot parse '" + value + "' as " + want);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) bad_value(key, v, "a non-negative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_size(key, trim(item)));
  if (out.empty()) bad_value(key, v, "a comma-separated list of integers");
  return out;
}

std::string fmt_double(double v) {
  // shortest text that parses back to the same double
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

template <class Get>
KeySpec size_key(std::string name, Get get) {
  return {name, false,
          [name, get](RunConfig& c, const std::string& v) { get(c) = parse_size(name, v); },
          [get](const RunConfig& c) { return std::to_string(get(const_cast<RunConfig&>(c))); }};
}

template <class Get>
KeySpec double_key(std::string name, Get get) {
  return {name, false,
          [name, get](RunConfig& c, const std::string& v) { get(c) = parse_double(name, v); },
          [get](const RunConfig& c) { return fmt_double(get(const_cast<RunConfig&>(c))); }};
}

template <class Get>
KeySpec bool_key(std::string name, Get get) {
  return {name, true,
          [name, get](RunConfig& c, const std::string& v) { get(c) = parse_bool(name, v); },
          [get](const RunConfig& c) { return std::string(get(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <class Get>
KeySpec string_key(std::string name, Get get) {
  return {name, false, [get](RunConfig& c, const std::string& v) { get(c) = v; },
          [get](const RunConfig& c) { return get(const_cast<RunConfig&>(c)); }};
}

template <class Get>
KeySpec list_key(std::string name, Get get) {
  return {name, false,
          [name, get](RunConfig& c, const std::string& v) { get(c) = parse_list(name, v); },
          [get](const RunConfig& c) { return fmt_list(get(const_cast<RunConfig&>(c))); }};
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> t;
    t.push_back({"mode", false,
                 [](RunConfig& c, const std::string& v) {
                   if (v == "baseline") {
                     c.mode = Mode::kBaseline;
                   } else if (v == "l2t") {
                     c.mode = Mode::kL2T;
                   } else {
                     bad_value("mode", v, "'baseline' or 'l2t'");
                   }
                 },
                 [](const RunConfig& c) { return to_string(c.mode); }});
    t.push_back(string_key("train_path", [](RunConfig& c) -> std::string& { return c.train_path; }));
    t.push_back(string_key("valid_path", [](RunConfig& c) -> std::string& { return c.valid_path; }));
    t.push_back(string_key("output_dir", [](RunConfig& c) -> std::string& { return c.output_dir; }));

    t.push_back(size_key("vocab_size", [](RunConfig& c) -> std::size_t& { return c.model.vocab_size; }));
    t.push_back(size_key("dim", [](RunConfig& c) -> std::size_t& { return c.model.dim; }));
    t.push_back(size_key("n_blocks", [](RunConfig& c) -> std::size_t& { return c.model.n_blocks; }));
    t.push_back(size_key("order", [](RunConfig& c) -> std::size_t& { return c.model.order; }));
    t.push_back(size_key("short_kernel", [](RunConfig& c) -> std::size_t& { return c.model.short_kernel; }));
    t.push_back(size_key("seq_len", [](RunConfig& c) -> std::size_t& { return c.seq_len; }));
    t.push_back(size_key("filter_pos_dim", [](RunConfig& c) -> std::size_t& { return c.model.filter_pos_dim; }));
    t.push_back(size_key("filter_hidden", [](RunConfig& c) -> std::size_t& { return c.model.filter_hidden; }));
    t.push_back(size_key("mlp_expansion", [](RunConfig& c) -> std::size_t& { return c.model.mlp_expansion; }));
    t.push_back(double_key("decay_min", [](RunConfig& c) -> double& { return c.model.decay_min; }));
    t.push_back(double_key("decay_max", [](RunConfig& c) -> double& { return c.model.decay_max; }));
    t.push_back(double_key("embedding_std", [](RunConfig& c) -> double& { return c.model.embedding_std; }));
    t.push_back(double_key("positional_std", [](RunConfig& c) -> double& { return c.model.positional_std; }));

    t.push_back(size_key("dln_hidden", [](RunConfig& c) -> std::size_t& { return c.dln.hidden; }));
    t.push_back(list_key("dln_widths", [](RunConfig& c) -> std::vector<std::size_t>& { return c.dln.mlp_widths; }));
    t.push_back(list_key("teacher_widths", [](RunConfig& c) -> std::vector<std::size_t>& { return c.teacher.widths; }));

    t.push_back(double_key("student_lr", [](RunConfig& c) -> double& { return c.student_opt.learning_rate; }));
    t.push_back(double_key("student_weight_decay", [](RunConfig& c) -> double& { return c.student_opt.weight_decay; }));
    t.push_back(double_key("teacher_lr", [](RunConfig& c) -> double& { return c.teacher_opt.learning_rate; }));
    t.push_back(double_key("teacher_weight_decay", [](RunConfig& c) -> double& { return c.teacher_opt.weight_decay; }));
    t.push_back(double_key("dln_lr", [](RunConfig& c) -> double& { return c.dln_opt.learning_rate; }));
    t.push_back(double_key("dln_weight_decay", [](RunConfig& c) -> double& { return c.dln_opt.weight_decay; }));
    t.push_back({"adam_beta1", false,
                 [](RunConfig& c, const std::string& v) {
                   c.student_opt.beta1 = c.teacher_opt.beta1 = c.dln_opt.beta1 = parse_double("adam_beta1", v);
                 },
                 [](const RunConfig& c) { return fmt_double(c.student_opt.beta1); }});
    t.push_back({"adam_beta2", false,
                 [](RunConfig& c, const std::string& v) {
                   c.student_opt.beta2 = c.teacher_opt.beta2 = c.dln_opt.beta2 = parse_double("adam_beta2", v);
                 },
                 [](const RunConfig& c) { return fmt_double(c.student_opt.beta2); }});
    t.push_back({"adam_epsilon", false,
                 [](RunConfig& c, const std::string& v) {
                   c.student_opt.epsilon = c.teacher_opt.epsilon = c.dln_opt.epsilon =
                       parse_double("adam_epsilon", v);
                 },
                 [](const RunConfig& c) { return fmt_double(c.student_opt.epsilon); }});
    t.push_back(double_key("lr_min_ratio", [](RunConfig& c) -> double& { return c.lr_min_ratio; }));
    t.push_back(double_key("warmup_epochs", [](RunConfig& c) -> double& { return c.warmup_epochs; }));
    t.push_back(bool_key("schedule_teacher", [](RunConfig& c) -> bool& { return c.schedule_teacher; }));
    t.push_back(bool_key("schedule_dln", [](RunConfig& c) -> bool& { return c.schedule_dln; }));

    t.push_back(size_key("epochs", [](RunConfig& c) -> std::size_t& { return c.epochs; }));
    t.push_back(size_key("batch_size", [](RunConfig& c) -> std::size_t& { return c.batch_size; }));
    t.push_back(size_key("eval_batch_size", [](RunConfig& c) -> std::size_t& { return c.eval_batch_size; }));
    t.push_back(double_key("beta", [](RunConfig& c) -> double& { return c.beta; }));
    t.push_back(double_key("huber_delta", [](RunConfig& c) -> double& { return c.huber_delta; }));
    t.push_back(double_key("clip_norm", [](RunConfig& c) -> double& { return c.clip_norm; }));
    t.push_back(size_key("buffer_capacity", [](RunConfig& c) -> std::size_t& { return c.buffer_capacity; }));
    t.push_back(size_key("teacher_batch", [](RunConfig& c) -> std::size_t& { return c.teacher_batch; }));
    t.push_back(size_key("activation_threshold", [](RunConfig& c) -> std::size_t& { return c.activation_threshold; }));
    t.push_back(double_key("norm_momentum", [](RunConfig& c) -> double& { return c.norm_momentum; }));
    t.push_back(double_key("priority_exponent", [](RunConfig& c) -> double& { return c.priority_exponent; }));
    t.push_back(size_key("max_steps", [](RunConfig& c) -> std::size_t& { return c.max_steps; }));
    t.push_back({"seed", false,
                 [](RunConfig& c, const std::string& v) { c.seed = parse_size("seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    t.push_back(bool_key("deterministic", [](RunConfig& c) -> bool& { return c.deterministic; }));
    t.push_back(size_key("threads", [](RunConfig& c) -> std::size_t& { return c.threads; }));
    return t;
  }();
  return table;
}

const KeySpec& find_key(const std::string& key) {
  for (const auto& k : key_table()) {
    if (k.name == key) return k;
  }
  throw ConfigError(key + ": unknown configuration key");
}

}  // namespace

std::string to_string(Mode m) { return m == Mode::kBaseline ? "baseline" : "l2t"; }

bool operator==(const RunConfig& a, const RunConfig& b) {
  for (const auto& k : key_table()) {
    if (k.get(a) != k.get(b)) return false;
  }
  return true;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
  }();
  return keys;
}

bool is_bool_key(const std::string& key) { return find_key(key).is_bool; }

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_key(key).set(cfg, trim(value));
  cfg.model.max_seq_len = cfg.seq_len;
  cfg.teacher.summary_dim = cfg.dln.hidden;
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  return find_key(key).get(cfg);
}

RunConfig parse_config_text(const std::string& text, RunConfig cfg) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key: value', got '" + line + "'");
    }
    set_config_value(cfg, trim(line.substr(0, colon)), line.substr(colon + 1));
  }
  cfg.model.max_seq_len = cfg.seq_len;
  cfg.teacher.summary_dim = cfg.dln.hidden;
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

RunConfig resolve_config(const std::filesystem::path* file,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  if (file) cfg = load_config_file(*file, cfg);
  for (const auto& [k, v] : overrides) set_config_value(cfg, k, v);
  validate(cfg);
  return cfg;
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) { throw ConfigError(key + ": " + why); };
  auto positive = [&](const std::string& key, double v) {
    if (!(v > 0) || !std::isfinite(v)) fail(key, "must be positive");
  };
  auto nonneg = [&](const std::string& key, double v) {
    if (!(v >= 0) || !std::isfinite(v)) fail(key, "must be ≥ 0");
  };
  positive("student_lr", c.student_opt.learning_rate);
  positive("teacher_lr", c.teacher_opt.learning_rate);
  positive("dln_lr", c.dln_opt.learning_rate);
  nonneg("student_weight_decay", c.student_opt.weight_decay);
  nonneg("teacher_weight_decay", c.teacher_opt.weight_decay);
  nonneg("dln_weight_decay", c.dln_opt.weight_decay);
  if (!(c.student_opt.beta1 >= 0 && c.student_opt.beta1 < 1)) fail("adam_beta1", "must be in [0, 1)");
  if (!(c.student_opt.beta2 >= 0 && c.student_opt.beta2 < 1)) fail("adam_beta2", "must be in [0, 1)");
  positive("adam_epsilon", c.student_opt.epsilon);
  if (!(c.lr_min_ratio >= 0 && c.lr_min_ratio <= 1)) fail("lr_min_ratio", "must be in [0, 1]");
  nonneg("warmup_epochs", c.warmup_epochs);
  if (c.epochs == 0) fail("epochs", "must be positive");
  if (c.batch_size == 0) fail("batch_size", "must be positive");
  if (c.seq_len == 0) fail("seq_len", "must be positive");
  if (c.model.vocab_size < 2) fail("vocab_size", "must be at least 2");
  if (c.model.dim == 0) fail("dim", "must be positive");
  if (c.model.n_blocks == 0) fail("n_blocks", "must be positive");
  if (c.model.order == 0) fail("order", "must be at least 1");
  if (c.model.short_kernel == 0 || c.model.short_kernel % 2 == 0) fail("short_kernel", "must be odd");
  if (c.model.filter_pos_dim == 0 || c.model.filter_pos_dim % 2 == 0) fail("filter_pos_dim", "must be odd");
  if (c.model.filter_hidden == 0) fail("filter_hidden", "must be positive");
  if (c.model.mlp_expansion == 0) fail("mlp_expansion", "must be positive");
  positive("decay_min", c.model.decay_min);
  if (!(c.model.decay_max >= c.model.decay_min)) fail("decay_max", "must be ≥ decay_min");
  positive("embedding_std", c.model.embedding_std);
  positive("positional_std", c.model.positional_std);
  if (c.dln.hidden == 0) fail("dln_hidden", "must be positive");
  for (auto w : c.dln.mlp_widths) {
    if (w == 0) fail("dln_widths", "widths must be positive");
  }
  if (c.dln.mlp_widths.size() != 3) fail("dln_widths", "the DLN head has exactly 4 affine layers (3 hidden widths)");
  for (auto w : c.teacher.widths) {
    if (w == 0) fail("teacher_widths", "widths must be positive");
  }
  nonneg("beta", c.beta);
  positive("huber_delta", c.huber_delta);
  positive("clip_norm", c.clip_norm);
  if (c.buffer_capacity == 0) fail("buffer_capacity", "must be positive");
  if (c.teacher_batch == 0) fail("teacher_batch", "must be positive");
  if (!(c.norm_momentum >= 0 && c.norm_momentum < 1)) fail("norm_momentum", "must be in [0, 1)");
  positive("priority_exponent", c.priority_exponent);
  if (c.train_path.empty()) fail("train_path", "must be set");
  if (c.valid_path.empty()) fail("valid_path", "must be set");
  if (c.output_dir.empty()) fail("output_dir", "must be set");
}

std::string echo_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : key_table()) out += k.name + ": " + k.get(cfg) + "\n";
  return out;
}

}  // namespace l2t::cli
