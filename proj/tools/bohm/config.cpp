#include "config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace bohm::cli {

// ---- expressions ----------------------------------------------------------

namespace {

class ExpressionParser {
 public:
  explicit ExpressionParser(const std::string& text) : s_(text) {}

  double parse() {
    const double v = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("cannot evaluate \"" + s_ + "\": " + why);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  double sum() {
    double v = product();
    for (;;) {
      if (eat('+')) {
        v += product();
      } else if (eat('-')) {
        v -= product();
      } else {
        return v;
      }
    }
  }
  double product() {
    double v = unary();
    for (;;) {
      if (eat('*')) {
        v *= unary();
      } else if (eat('/')) {
        v /= unary();
      } else {
        return v;
      }
    }
  }
  double unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }
  double power() {
    const double base = atom();
    if (eat('^')) return std::pow(base, unary());
    return base;
  }
  double atom() {
    skip();
    if (eat('(')) {
      const double v = sum();
      if (!eat(')')) fail("missing ')'");
      return v;
    }
    if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      std::size_t used = 0;
      const double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return v;
    }
    std::string name;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) name += s_[pos_++];
    if (name == "pi") return std::numbers::pi;
    if (name == "e") return std::numbers::e;
    if (name.empty()) fail("expected a number");
    if (!eat('(')) fail("unknown name '" + name + "'");
    const double arg = sum();
    if (!eat(')')) fail("missing ')'");
    if (name == "sqrt") return std::sqrt(arg);
    if (name == "exp") return std::exp(arg);
    if (name == "log") return std::log(arg);
    if (name == "sin") return std::sin(arg);
    if (name == "cos") return std::cos(arg);
    fail("unknown function '" + name + "'");
  }

  std::string s_;
  std::size_t pos_ = 0;
};

// ---- typed readers with JSON-pointer error reporting ----------------------

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string child(const std::string& ptr, std::size_t index) { return ptr + "/" + std::to_string(index); }

void check_keys(const json& obj, const std::string& ptr, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(ptr.empty() ? "/" : ptr, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(child(ptr, key), "unknown key");
  }
}

double read_number(const json& v, const std::string& ptr) {
  double out = 0.0;
  if (v.is_number()) {
    out = v.get<double>();
  } else if (v.is_string()) {
    try {
      out = evaluate_expression(v.get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(ptr, e.what());
    }
  } else {
    throw ConfigError(ptr, "expected a number or numeric expression");
  }
  if (!std::isfinite(out)) throw ConfigError(ptr, "value is not finite");
  return out;
}

long long read_integer(const json& v, const std::string& ptr) {
  if (v.is_number_integer()) return v.get<long long>();
  const double d = read_number(v, ptr);
  if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError(ptr, "expected an integer");
  return static_cast<long long>(d);
}

int read_int(const json& v, const std::string& ptr) {
  const auto i = read_integer(v, ptr);
  if (i < -2147483647LL || i > 2147483647LL) throw ConfigError(ptr, "integer out of range");
  return static_cast<int>(i);
}

std::optional<int> read_band(const json& v, const std::string& ptr) {
  if (v.is_null() || (v.is_string() && v.get<std::string>() == "unbounded")) return std::nullopt;
  return read_int(v, ptr);
}

bool read_bool(const json& v, const std::string& ptr) {
  if (!v.is_boolean()) throw ConfigError(ptr, "expected true or false");
  return v.get<bool>();
}

std::string read_string(const json& v, const std::string& ptr) {
  if (!v.is_string()) throw ConfigError(ptr, "expected a string");
  return v.get<std::string>();
}

const json& read_array(const json& v, const std::string& ptr) {
  if (!v.is_array()) throw ConfigError(ptr, "expected an array");
  return v;
}

std::vector<double> read_numbers(const json& v, const std::string& ptr) {
  std::vector<double> out;
  const auto& a = read_array(v, ptr);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(read_number(a[i], child(ptr, i)));
  return out;
}

Rect read_rect(const json& v, const std::string& ptr) {
  const auto r = read_numbers(v, ptr);
  if (r.size() != 4) throw ConfigError(ptr, "expected [x_min, x_max, y_min, y_max]");
  const Rect rect{r[0], r[1], r[2], r[3]};
  if (!rect.valid()) throw ConfigError(ptr, "rectangle is empty");
  return rect;
}

json band_json(const std::optional<int>& nf) { return nf ? json(*nf) : json("unbounded"); }
json rect_json(const Rect& r) { return json::array({r.x_min, r.x_max, r.y_min, r.y_max}); }

const char* locator_name(NodeLocator l) {
  switch (l) {
    case NodeLocator::analytic:
      return "analytic";
    case NodeLocator::numeric:
      return "numeric";
    case NodeLocator::automatic:
      return "automatic";
  }
  return "automatic";
}

void parse_spec(const json& j, SystemSpec& s) {
  const std::string p = "/spec";
  check_keys(j, p, {"a0", "b0", "omega_x", "omega_y", "c1", "c2", "n_in", "n_f", "renormalize"});
  if (j.contains("a0")) s.a0 = read_number(j["a0"], p + "/a0");
  if (j.contains("b0")) s.b0 = read_number(j["b0"], p + "/b0");
  if (j.contains("omega_x")) s.omega_x = read_number(j["omega_x"], p + "/omega_x");
  if (j.contains("omega_y")) s.omega_y = read_number(j["omega_y"], p + "/omega_y");
  const bool has_c1 = j.contains("c1");
  const bool has_c2 = j.contains("c2");
  if (has_c1) s.c1 = read_number(j["c1"], p + "/c1");
  if (has_c2) s.c2 = read_number(j["c2"], p + "/c2");
  // One coefficient fixes the other through c1^2 + c2^2 = 1.
  if (has_c2 && !has_c1) {
    if (std::abs(s.c2) > 1.0) throw ConfigError(p + "/c2", "|c2| must be <= 1");
    s.c1 = std::sqrt(1.0 - s.c2 * s.c2);
  } else if (has_c1 && !has_c2) {
    if (std::abs(s.c1) > 1.0) throw ConfigError(p + "/c1", "|c1| must be <= 1");
    s.c2 = std::sqrt(1.0 - s.c1 * s.c1);
  }
  if (j.contains("n_in")) s.n_in = read_int(j["n_in"], p + "/n_in");
  if (j.contains("n_f")) s.n_f = read_band(j["n_f"], p + "/n_f");
  if (j.contains("renormalize")) s.renormalize = read_bool(j["renormalize"], p + "/renormalize");
  try {
    s.validate();
  } catch (const SpecError& e) {
    throw ConfigError(p, e.what());
  }
}

void parse_integrator(const json& j, IntegratorSettings& s) {
  const std::string p = "/integrator";
  check_keys(j, p, {"rel_tol", "abs_tol", "dt_init", "dt_min", "v_cap", "t_end", "sample_dt", "safety_box"});
  auto num = [&](const char* key, double& field) {
    if (j.contains(key)) field = read_number(j[key], p + "/" + key);
  };
  num("rel_tol", s.rel_tol);
  num("abs_tol", s.abs_tol);
  num("dt_init", s.dt_init);
  num("dt_min", s.dt_min);
  num("v_cap", s.v_cap);
  num("t_end", s.t_end);
  num("sample_dt", s.sample_dt);
  if (j.contains("safety_box")) s.safety_box = read_rect(j["safety_box"], p + "/safety_box");
  try {
    s.validate();
  } catch (const SpecError& e) {
    throw ConfigError(p, e.what());
  }
}

void parse_analysis(const json& j, AnalysisSettings& a) {
  const std::string p = "/analysis";
  check_keys(j, p,
             {"bounds", "resolution", "times", "floor", "node_mode", "locator", "k_max", "seed_grid", "t0", "t1",
              "dt", "speed_level", "contour_grid", "continuation_threshold", "lyapunov", "renorm_interval",
              "n_f_list", "c2_list", "sweep_n_in", "amplitudes", "n_f_max", "checkpoints", "born_count"});
  auto num = [&](const char* key, double& field) {
    if (j.contains(key)) field = read_number(j[key], p + "/" + key);
  };
  auto integer = [&](const char* key, int& field) {
    if (j.contains(key)) field = read_int(j[key], p + "/" + key);
  };
  if (j.contains("bounds")) a.grid.bounds = read_rect(j["bounds"], p + "/bounds");
  integer("resolution", a.grid.resolution);
  if (a.grid.resolution < 1 || a.grid.resolution > 20000) throw ConfigError(p + "/resolution", "must be in [1, 20000]");
  if (j.contains("times")) a.times = read_numbers(j["times"], p + "/times");
  num("floor", a.floor);
  if (!(a.floor > 0.0)) throw ConfigError(p + "/floor", "must be positive");
  if (j.contains("node_mode")) {
    a.node_mode = read_string(j["node_mode"], p + "/node_mode");
    static const std::set<std::string> modes{"snapshot", "trace", "contour", "crosscheck"};
    if (!modes.count(a.node_mode)) {
      throw ConfigError(p + "/node_mode", "expected snapshot, trace, contour or crosscheck");
    }
  }
  if (j.contains("locator")) {
    const auto l = read_string(j["locator"], p + "/locator");
    if (l == "analytic") {
      a.locator = NodeLocator::analytic;
    } else if (l == "numeric") {
      a.locator = NodeLocator::numeric;
    } else if (l == "automatic") {
      a.locator = NodeLocator::automatic;
    } else {
      throw ConfigError(p + "/locator", "expected analytic, numeric or automatic");
    }
  }
  integer("k_max", a.k_max);
  if (a.k_max < 0) throw ConfigError(p + "/k_max", "must be >= 0");
  integer("seed_grid", a.seed_grid);
  if (a.seed_grid < 64) throw ConfigError(p + "/seed_grid", "must be >= 64");
  num("t0", a.t0);
  num("t1", a.t1);
  if (!(a.t1 >= a.t0)) throw ConfigError(p + "/t1", "must be >= t0");
  num("dt", a.dt);
  if (!(a.dt > 0.0)) throw ConfigError(p + "/dt", "must be positive");
  num("speed_level", a.speed_level);
  if (!(a.speed_level > 0.0)) throw ConfigError(p + "/speed_level", "must be positive");
  integer("contour_grid", a.contour_grid);
  if (a.contour_grid < 2) throw ConfigError(p + "/contour_grid", "must be >= 2");
  num("continuation_threshold", a.continuation_threshold);
  if (!(a.continuation_threshold > 0.0)) throw ConfigError(p + "/continuation_threshold", "must be positive");
  if (j.contains("lyapunov")) a.lyapunov = read_bool(j["lyapunov"], p + "/lyapunov");
  num("renorm_interval", a.renorm_interval);
  if (!(a.renorm_interval > 0.0)) throw ConfigError(p + "/renorm_interval", "must be positive");
  if (j.contains("n_f_list")) {
    const auto& arr = read_array(j["n_f_list"], p + "/n_f_list");
    a.n_f_list.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) a.n_f_list.push_back(read_band(arr[i], child(p + "/n_f_list", i)));
    if (a.n_f_list.empty()) throw ConfigError(p + "/n_f_list", "must not be empty");
  }
  if (j.contains("c2_list")) {
    a.c2_list = read_numbers(j["c2_list"], p + "/c2_list");
    if (a.c2_list.empty()) throw ConfigError(p + "/c2_list", "must not be empty");
    for (std::size_t i = 0; i < a.c2_list.size(); ++i) {
      if (std::abs(a.c2_list[i]) > 1.0) throw ConfigError(child(p + "/c2_list", i), "|c2| must be <= 1");
    }
  }
  integer("sweep_n_in", a.sweep_n_in);
  if (a.sweep_n_in < 0) throw ConfigError(p + "/sweep_n_in", "must be >= 0");
  if (j.contains("amplitudes")) {
    a.amplitudes = read_numbers(j["amplitudes"], p + "/amplitudes");
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i) {
      if (!(a.amplitudes[i] > 0.0)) throw ConfigError(child(p + "/amplitudes", i), "must be positive");
    }
  }
  integer("n_f_max", a.n_f_max);
  if (a.n_f_max < 0 || a.n_f_max > 500) throw ConfigError(p + "/n_f_max", "must be in [0, 500]");
  if (j.contains("checkpoints")) a.checkpoints = read_numbers(j["checkpoints"], p + "/checkpoints");
  if (j.contains("born_count")) {
    const auto n = read_integer(j["born_count"], p + "/born_count");
    if (n < 0) throw ConfigError(p + "/born_count", "must be >= 0");
    a.born_count = static_cast<std::uint64_t>(n);
  }
}

}  // namespace

double evaluate_expression(const std::string& text) { return ExpressionParser(text).parse(); }

bool RunConfig::wants(const std::string& artifact) const {
  return std::find(outputs.begin(), outputs.end(), artifact) != outputs.end();
}

RunConfig parse_config(const json& doc) {
  check_keys(doc, "",
             {"spec", "integrator", "analysis", "initial_points", "seeds", "outputs", "tool_version", "config_hash",
              "command", "artifacts", "status"});
  RunConfig c;
  if (doc.contains("spec")) parse_spec(doc["spec"], c.spec);
  if (doc.contains("integrator")) parse_integrator(doc["integrator"], c.integrator);
  if (doc.contains("analysis")) parse_analysis(doc["analysis"], c.analysis);
  if (doc.contains("initial_points")) {
    const auto& arr = read_array(doc["initial_points"], "/initial_points");
    c.initial_points.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto p = read_numbers(arr[i], child("/initial_points", i));
      if (p.size() != 2) throw ConfigError(child("/initial_points", i), "expected [x, y]");
      c.initial_points.push_back({p[0], p[1]});
    }
  }
  if (doc.contains("seeds")) {
    const auto& arr = read_array(doc["seeds"], "/seeds");
    c.seeds.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto v = read_integer(arr[i], child("/seeds", i));
      if (v < 0) throw ConfigError(child("/seeds", i), "seeds must be >= 0");
      c.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  }
  if (doc.contains("outputs")) {
    static const std::set<std::string> known{"csv", "binary", "image"};
    const auto& arr = read_array(doc["outputs"], "/outputs");
    c.outputs.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto s = read_string(arr[i], child("/outputs", i));
      if (!known.count(s)) throw ConfigError(child("/outputs", i), "expected csv, binary or image");
      c.outputs.push_back(std::move(s));
    }
  }
  if (doc.contains("config_hash")) {
    const auto stored = read_string(doc["config_hash"], "/config_hash");
    if (stored != config_hash(c)) {
      throw ConfigError("/config_hash", "does not match the configuration (edited manifest? remove the field)");
    }
  }
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("", "override must look like section.key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  std::string pointer;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    pointer += "/" + path.substr(start, dot - start);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  try {
    doc[json::json_pointer(pointer)] = value;
  } catch (const json::exception& e) {
    throw ConfigError(pointer, std::string("cannot apply override: ") + e.what());
  }
}

json canonical_json(const RunConfig& c) {
  json j;
  const auto& s = c.spec;
  j["spec"] = {{"a0", s.a0},       {"b0", s.b0}, {"omega_x", s.omega_x},     {"omega_y", s.omega_y},
               {"c1", s.c1},       {"c2", s.c2}, {"n_in", s.n_in},           {"n_f", band_json(s.n_f)},
               {"renormalize", s.renormalize}};
  const auto& g = c.integrator;
  j["integrator"] = {{"rel_tol", g.rel_tol}, {"abs_tol", g.abs_tol},     {"dt_init", g.dt_init},
                     {"dt_min", g.dt_min},   {"v_cap", g.v_cap},         {"t_end", g.t_end},
                     {"sample_dt", g.sample_dt}, {"safety_box", rect_json(g.safety_box)}};
  const auto& a = c.analysis;
  json nf = json::array();
  for (const auto& n : a.n_f_list) nf.push_back(band_json(n));
  j["analysis"] = {{"bounds", rect_json(a.grid.bounds)},
                   {"resolution", a.grid.resolution},
                   {"times", a.times},
                   {"floor", a.floor},
                   {"node_mode", a.node_mode},
                   {"locator", locator_name(a.locator)},
                   {"k_max", a.k_max},
                   {"seed_grid", a.seed_grid},
                   {"t0", a.t0},
                   {"t1", a.t1},
                   {"dt", a.dt},
                   {"speed_level", a.speed_level},
                   {"contour_grid", a.contour_grid},
                   {"continuation_threshold", a.continuation_threshold},
                   {"lyapunov", a.lyapunov},
                   {"renorm_interval", a.renorm_interval},
                   {"n_f_list", nf},
                   {"c2_list", a.c2_list},
                   {"sweep_n_in", a.sweep_n_in},
                   {"amplitudes", a.amplitudes},
                   {"n_f_max", a.n_f_max},
                   {"checkpoints", a.checkpoints},
                   {"born_count", a.born_count}};
  json pts = json::array();
  for (const auto& p : c.initial_points) pts.push_back({p.x, p.y});
  j["initial_points"] = pts;
  j["seeds"] = c.seeds;
  j["outputs"] = c.outputs;
  return j;
}

std::string config_hash(const RunConfig& config) {
  const std::string text = canonical_json(config).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::uint64_t short_hash(const std::string& hex_digest) {
  if (hex_digest.size() < 16) throw Error("digest too short");
  return std::stoull(hex_digest.substr(0, 16), nullptr, 16);
}

}  // namespace bohm::cli
