#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "boundary_ctrl/errors.hpp"
#include "boundary_ctrl/runner.hpp"

namespace bctrl::runner {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_real(const std::string& field, const std::string& raw) {
  double v = 0.0;
  const std::string t = trim(raw);
  const char* first = t.data();
  if (!t.empty() && t.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(field, "expected a real number, got '" + t + "'");
  }
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

template <class Int>
Int parse_integer(const std::string& field, const std::string& raw) {
  const std::string t = trim(raw);
  Int v{};
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec == std::errc() && ptr == t.data() + t.size() && !t.empty()) return v;
  // accept integral reals such as 1e6
  const double d = parse_real(field, t);
  if (std::floor(d) != d || std::abs(d) > 9.0e15) {
    throw ConfigError(field, "expected an integer, got '" + t + "'");
  }
  if (d < 0 && std::is_unsigned_v<Int>) throw ConfigError(field, "must be non-negative");
  return static_cast<Int>(d);
}

bool parse_bool(const std::string& field, const std::string& raw) {
  const std::string t = trim(raw);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(field, "expected true or false, got '" + t + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"l", [](ExperimentConfig& c, const std::string& v) { c.l = parse_real("l", v); }},
      {"N", [](ExperimentConfig& c, const std::string& v) { c.N = parse_integer<int>("N", v); }},
      {"a", [](ExperimentConfig& c, const std::string& v) { c.a = parse_real("a", v); }},
      {"c", [](ExperimentConfig& c, const std::string& v) { c.c = parse_real("c", v); }},
      {"tau", [](ExperimentConfig& c, const std::string& v) { c.tau = parse_real("tau", v); }},
      {"horizon", [](ExperimentConfig& c, const std::string& v) { c.horizon = parse_real("horizon", v); }},
      {"tolerance",
       [](ExperimentConfig& c, const std::string& v) { c.tolerance = parse_real("tolerance", v); }},
      {"Q", [](ExperimentConfig& c, const std::string& v) { c.Q = parse_integer<std::int64_t>("Q", v); }},
      {"seed",
       [](ExperimentConfig& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>("seed", v); }},
      {"initial", [](ExperimentConfig& c, const std::string& v) { c.initial = trim(v); }},
      {"target", [](ExperimentConfig& c, const std::string& v) { c.target = trim(v); }},
      {"mu0", [](ExperimentConfig& c, const std::string& v) { c.mu0 = parse_real("mu0", v); }},
      {"mu1", [](ExperimentConfig& c, const std::string& v) { c.mu1 = parse_real("mu1", v); }},
      {"fidelity_target",
       [](ExperimentConfig& c, const std::string& v) {
         c.fidelity_target = parse_real("fidelity_target", v);
       }},
      {"freeze", [](ExperimentConfig& c, const std::string& v) { c.freeze = trim(v); }},
      {"model", [](ExperimentConfig& c, const std::string& v) { c.model = trim(v); }},
      {"starts", [](ExperimentConfig& c, const std::string& v) { c.starts = parse_integer<int>("starts", v); }},
      {"levels", [](ExperimentConfig& c, const std::string& v) { c.levels = parse_integer<int>("levels", v); }},
      {"substeps",
       [](ExperimentConfig& c, const std::string& v) { c.substeps = parse_integer<int>("substeps", v); }},
      {"trials", [](ExperimentConfig& c, const std::string& v) { c.trials = parse_integer<int>("trials", v); }},
      {"certify_horizon",
       [](ExperimentConfig& c, const std::string& v) {
         c.certify_horizon = parse_real("certify_horizon", v);
       }},
      {"certify_N",
       [](ExperimentConfig& c, const std::string& v) { c.certify_N = parse_integer<int>("certify_N", v); }},
      {"certify_identical",
       [](ExperimentConfig& c, const std::string& v) {
         c.certify_identical = parse_bool("certify_identical", v);
       }},
      {"certify_corrupt",
       [](ExperimentConfig& c, const std::string& v) {
         c.certify_corrupt = parse_bool("certify_corrupt", v);
       }},
      {"binary_dump",
       [](ExperimentConfig& c, const std::string& v) { c.binary_dump = parse_bool("binary_dump", v); }},
      {"max_rows",
       [](ExperimentConfig& c, const std::string& v) { c.max_rows = parse_integer<int>("max_rows", v); }},
  };
  return table;
}

void assign(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError(key, "unknown configuration key");
  it->second(config, value);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, bool json) {
  ExperimentConfig config;
  if (json) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("<file>", "JSON configuration must be an object");
    for (const auto& [key, value] : doc.items()) {
      if (value.is_string()) {
        assign(config, key, value.get<std::string>());
      } else if (value.is_number() || value.is_boolean()) {
        assign(config, key, value.dump());
      } else {
        throw ConfigError(key, "expected a number, string or boolean");
      }
    }
  } else {
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string body = trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(number), "expected 'key = value'");
      }
      const std::string key = trim(std::string_view(body).substr(0, eq));
      const std::string value = trim(std::string_view(body).substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(number), "empty key");
      assign(config, key, value);
    }
  }
  validate(config);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.extension() == ".json");
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const char* field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
  };
  require(std::isfinite(c.l) && c.l > 0.0, "l", "interval length must be positive");
  require(c.N >= 1 && c.N <= 256, "N", "truncation half-width must lie in [1, 256]");
  require(std::isfinite(c.a), "a", "base potential must be finite");
  require(std::isfinite(c.c) && c.c > 0.0, "c", "control bound must be positive");
  require(std::isfinite(c.tau) && c.tau > 0.0, "tau", "window length must be positive");
  require(std::isfinite(c.horizon) && c.horizon >= 0.0, "horizon", "horizon must be >= 0");
  require(std::isfinite(c.tolerance) && c.tolerance > 0.0, "tolerance", "tolerance must be positive");
  require(c.Q >= 1, "Q", "denominator bound must be >= 1");
  require(std::isfinite(c.mu0), "mu0", "must be finite");
  require(std::isfinite(c.mu1), "mu1", "must be finite");
  require(c.fidelity_target > 0.0 && c.fidelity_target <= 1.0, "fidelity_target",
          "must lie in (0, 1]");
  require(c.freeze == "left" || c.freeze == "midpoint", "freeze", "must be 'left' or 'midpoint'");
  require(c.model == "boundary" || c.model == "auxiliary", "model",
          "must be 'boundary' or 'auxiliary'");
  require(c.starts >= 1, "starts", "must be >= 1");
  require(c.levels >= 2, "levels", "must be >= 2");
  require(c.substeps >= 1, "substeps", "must be >= 1");
  require(c.trials >= 1, "trials", "must be >= 1");
  require(std::isfinite(c.certify_horizon) && c.certify_horizon > 0.0, "certify_horizon",
          "must be positive");
  require(c.certify_N >= 1 && c.certify_N <= 64, "certify_N", "must lie in [1, 64]");
  require(c.max_rows >= 2, "max_rows", "must be >= 2");
  require(!c.initial.empty(), "initial", "state specifier is empty");
  require(!c.target.empty(), "target", "state specifier is empty");
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["l"] = c.l;
  j["N"] = c.N;
  j["a"] = c.a;
  j["c"] = c.c;
  j["tau"] = c.tau;
  j["horizon"] = c.horizon;
  j["tolerance"] = c.tolerance;
  j["Q"] = c.Q;
  j["seed"] = c.seed;
  j["initial"] = c.initial;
  j["target"] = c.target;
  j["mu0"] = c.mu0;
  j["mu1"] = c.mu1;
  j["fidelity_target"] = c.fidelity_target;
  j["freeze"] = c.freeze;
  j["model"] = c.model;
  j["starts"] = c.starts;
  j["levels"] = c.levels;
  j["substeps"] = c.substeps;
  j["trials"] = c.trials;
  j["certify_horizon"] = c.certify_horizon;
  j["certify_N"] = c.certify_N;
  j["certify_identical"] = c.certify_identical;
  j["certify_corrupt"] = c.certify_corrupt;
  j["binary_dump"] = c.binary_dump;
  j["max_rows"] = c.max_rows;
  return j;
}

namespace {

Complex parse_complex(const std::string& field, const std::string& raw) {
  std::string t = trim(raw);
  if (t.empty()) throw ConfigError(field, "empty vector entry");
  if (t.back() != 'i' && t.back() != 'j') return {parse_real(field, t), 0.0};
  t.pop_back();
  // split at the last sign that is not an exponent sign or the leading sign
  std::size_t split = std::string::npos;
  for (std::size_t k = t.size(); k-- > 1;) {
    if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  auto imag = [&](const std::string& s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    return parse_real(field, s);
  };
  if (split == std::string::npos) return {0.0, imag(t)};
  return {parse_real(field, t.substr(0, split)), imag(t.substr(split))};
}

}  // namespace

CVector resolve_state(const std::string& spec, const CMatrix& eigenvectors, int half_width,
                      const std::string& field) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError(field, "state specifier must be eigenstate:k, mode:n or vector:...");
  }
  const std::string kind = trim(std::string_view(spec).substr(0, colon));
  const std::string arg = trim(std::string_view(spec).substr(colon + 1));
  const Index dim = eigenvectors.rows();
  if (kind == "eigenstate") {
    const auto k = parse_integer<long>(field, arg);
    if (k < 0 || k >= dim) throw ConfigError(field, "eigenstate index out of range");
    return eigenvectors.col(k);
  }
  if (kind == "mode") {
    const auto n = parse_integer<long>(field, arg);
    if (n < -half_width || n > half_width) throw ConfigError(field, "mode outside truncation window");
    CVector v = CVector::Zero(dim);
    v(n + half_width) = 1.0;
    return v;
  }
  if (kind == "vector") {
    std::vector<Complex> entries;
    std::stringstream in(arg);
    std::string item;
    while (std::getline(in, item, ',')) entries.push_back(parse_complex(field, item));
    if (static_cast<Index>(entries.size()) != dim) {
      throw ConfigError(field, "vector has " + std::to_string(entries.size()) + " entries, expected " +
                                   std::to_string(dim));
    }
    CVector v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = entries[static_cast<std::size_t>(i)];
    const double n = v.norm();
    if (n == 0.0) throw ConfigError(field, "vector is zero");
    return v / n;
  }
  throw ConfigError(field, "unknown state kind '" + kind + "'");
}

}  // namespace bctrl::runner
