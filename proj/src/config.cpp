#include "rgcf/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rgcf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw std::invalid_argument("config: bad value '" + std::string(value) +
                              "' for key '" + std::string(key) + "'");
}

std::uint64_t parse_uint(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || p != value.data() + value.size()) bad_value(key, value);
  return v;
}

double parse_real(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(value), &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, value);
  } catch (const std::out_of_range&) {
    bad_value(key, value);
  }
}

}  // namespace

ModelConfig parse_config_text(std::string_view text) {
  ModelConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string_view line = (end == std::string_view::npos)
                                ? text.substr(pos)
                                : text.substr(pos, end - pos);
    pos = (end == std::string_view::npos) ? text.size() : end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not 'key = value'");

    if (key == "k") cfg.k = static_cast<std::uint32_t>(parse_uint(key, value));
    else if (key == "L") cfg.L = static_cast<std::uint32_t>(parse_uint(key, value));
    else if (key == "lambda") cfg.lambda = parse_real(key, value);
    else if (key == "alpha") cfg.alpha = parse_real(key, value);
    else if (key == "beta") cfg.beta = parse_real(key, value);
    else if (key == "learning_rate") cfg.learning_rate = parse_real(key, value);
    else if (key == "batch_size")
      cfg.batch_size = static_cast<std::uint32_t>(parse_uint(key, value));
    else if (key == "max_epochs")
      cfg.max_epochs = static_cast<std::uint32_t>(parse_uint(key, value));
    else if (key == "eval_every")
      cfg.eval_every = static_cast<std::uint32_t>(parse_uint(key, value));
    else if (key == "patience")
      cfg.patience = static_cast<std::uint32_t>(parse_uint(key, value));
    else if (key == "mode") {
      if (value == "last_layer") cfg.mode = FinalMode::last_layer;
      else if (value == "concat") cfg.mode = FinalMode::concat;
      else bad_value(key, value);
    } else if (key == "reg_scope") {
      if (value == "batch") cfg.reg_scope = RegScope::batch;
      else if (value == "full") cfg.reg_scope = RegScope::full;
      else bad_value(key, value);
    } else if (key == "seed") cfg.seed = parse_uint(key, value);
    else if (key == "precision") {
      if (value == "single") cfg.precision = Precision::single;
      else if (value == "double") cfg.precision = Precision::double_precision;
      else bad_value(key, value);
    } else {
      throw std::invalid_argument("config: unknown key '" + std::string(key) +
                                  "' at line " + std::to_string(line_no));
    }
  }
  validate_config(cfg);
  return cfg;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ModelConfig& cfg) {
  char buf[512];
  std::snprintf(
      buf, sizeof(buf),
      "k = %u\nL = %u\nlambda = %.17g\nalpha = %.17g\nbeta = %.17g\n"
      "learning_rate = %.17g\nbatch_size = %u\nmax_epochs = %u\n"
      "eval_every = %u\npatience = %u\nmode = %s\nreg_scope = %s\n"
      "seed = %llu\nprecision = %s\n",
      cfg.k, cfg.L, cfg.lambda, cfg.alpha, cfg.beta, cfg.learning_rate,
      cfg.batch_size, cfg.max_epochs, cfg.eval_every, cfg.patience,
      cfg.mode == FinalMode::concat ? "concat" : "last_layer",
      cfg.reg_scope == RegScope::full ? "full" : "batch",
      static_cast<unsigned long long>(cfg.seed),
      cfg.precision == Precision::single ? "single" : "double");
  return buf;
}

}  // namespace rgcf
