#include "sohklstm/config.hpp"

#include <charconv>
#include <fstream>

#include "sohklstm/errors.hpp"

namespace sohklstm {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const std::string v = trim(value);
  const char* begin = v.data();
  const char* end = begin + v.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    throw ConfigError("configuration key '" + key + "' has unparsable value '" + value + "'");
  }
  return out;
}

}  // namespace

void config_set(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "model") cfg.model = trim(value);
  else if (key == "hidden_size") cfg.hidden_size = parse_number<int>(key, value);
  else if (key == "window") cfg.window = parse_number<int>(key, value);
  else if (key == "degree") cfg.degree = parse_number<int>(key, value);
  else if (key == "grid_inner") cfg.grid_inner = parse_number<int>(key, value);
  else if (key == "grid_outer") cfg.grid_outer = parse_number<int>(key, value);
  else if (key == "channels") cfg.channels = parse_number<int>(key, value);
  else if (key == "lr") cfg.lr = parse_number<double>(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_number<int>(key, value);
  else if (key == "max_epochs") cfg.max_epochs = parse_number<int>(key, value);
  else if (key == "patience") cfg.patience = parse_number<int>(key, value);
  else if (key == "lr_factor") cfg.lr_factor = parse_number<double>(key, value);
  else if (key == "lr_patience") cfg.lr_patience = parse_number<int>(key, value);
  else if (key == "min_lr") cfg.min_lr = parse_number<double>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "nominal_capacity") cfg.nominal_capacity = parse_number<double>(key, value);
  else if (key == "grad_clip") cfg.grad_clip = parse_number<double>(key, value);
  else if (key == "data") cfg.data = trim(value);
  else if (key == "out") cfg.out = trim(value);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

RunConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open configuration file '" + path + "'");
  RunConfig cfg;
  std::string line;
  long line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("configuration line " + std::to_string(line_no) +
                        " is not 'key = value': '" + stripped + "'");
    }
    config_set(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return cfg;
}

void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (cfg.model != "lstm" && cfg.model != "klstm") {
    fail("model must be 'lstm' or 'klstm', got '" + cfg.model + "'");
  }
  if (cfg.hidden_size < 1 || cfg.hidden_size > 4096) fail("hidden_size must be in [1, 4096]");
  if (cfg.window < 1 || cfg.window > 1024) fail("window must be in [1, 1024]");
  if (cfg.degree < 1 || cfg.degree > 7) fail("degree must be in [1, 7]");
  if (cfg.grid_inner < cfg.degree + 1 || cfg.grid_inner > 1024) {
    fail("grid_inner must be in [degree+1, 1024]");
  }
  if (cfg.grid_outer < cfg.degree + 1 || cfg.grid_outer > 1024) {
    fail("grid_outer must be in [degree+1, 1024]");
  }
  if (cfg.channels < 1 || cfg.channels > 64) fail("channels must be in [1, 64]");
  if (!(cfg.lr > 0.0)) fail("lr must be positive");
  if (cfg.batch_size < 1) fail("batch_size must be at least 1");
  if (cfg.max_epochs < 1) fail("max_epochs must be at least 1");
  if (cfg.patience < 0) fail("patience must be nonnegative (0 disables early stopping)");
  if (cfg.lr_patience < 0) fail("lr_patience must be nonnegative (0 disables LR reduction)");
  if (!(cfg.lr_factor > 0.0 && cfg.lr_factor < 1.0)) fail("lr_factor must be in (0, 1)");
  if (!(cfg.min_lr > 0.0)) fail("min_lr must be positive");
  if (cfg.nominal_capacity < 0.0) fail("nominal_capacity must be nonnegative");
  if (cfg.grad_clip < 0.0) fail("grad_clip must be nonnegative (0 disables clipping)");
}

ModelShape shape_from(const RunConfig& cfg) {
  ModelShape s;
  s.klstm = cfg.model == "klstm";
  s.hidden = cfg.hidden_size;
  s.input = 4;
  s.grid_inner = cfg.grid_inner;
  s.grid_outer = cfg.grid_outer;
  s.degree = cfg.degree;
  s.channels = cfg.channels;
  return s;
}

}  // namespace sohklstm
