#include "crosstack/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "crosstack/csv.hpp"

namespace crosstack {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects an unsigned integer, got '" +
                                v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: key '" + key + "' expects an unsigned integer, got '" +
                                v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: key '" + key + "' expects true/false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct KeyDef {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define NUM_KEY(sec, name, field)                                                       \
  KeyDef{sec, name, [](const RunConfig& c) { return fmt(c.field); },                    \
         [](RunConfig& c, const std::string& k, const std::string& v) {                 \
           c.field = parse_double(k, v);                                                \
         }}
#define INT_KEY(sec, name, field, type)                                                 \
  KeyDef{sec, name, [](const RunConfig& c) { return std::to_string(c.field); },         \
         [](RunConfig& c, const std::string& k, const std::string& v) {                 \
           c.field = static_cast<type>(parse_int(k, v));                                \
         }}
#define BOOL_KEY(sec, name, field)                                                      \
  KeyDef{sec, name, [](const RunConfig& c) { return c.field ? "true" : "false"; },      \
         [](RunConfig& c, const std::string& k, const std::string& v) {                 \
           c.field = parse_bool(k, v);                                                  \
         }}

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      NUM_KEY("device", "r_set", device.r_set),
      NUM_KEY("device", "r_reset", device.r_reset),
      NUM_KEY("device", "sigma_set", device.sigma_set),
      NUM_KEY("device", "sigma_reset", device.sigma_reset),
      NUM_KEY("device", "v_th", device.v_th),
      NUM_KEY("device", "v_write", device.v_write),
      NUM_KEY("device", "t_write_full", device.t_write_full),
      INT_KEY("device", "polarity", device.polarity, int),
      NUM_KEY("transistor", "r_on", transistor.r_on),
      NUM_KEY("transistor", "g_off", transistor.g_off),
      NUM_KEY("transistor", "w_over_l", transistor.w_over_l),
      INT_KEY("geometry", "rows_per_layer", geometry.rows_per_layer, int),
      INT_KEY("geometry", "cols", geometry.cols, int),
      INT_KEY("geometry", "layers", geometry.layers, int),
      NUM_KEY("geometry", "r_wire_per_cell", geometry.r_wire_per_cell),
      KeyDef{"geometry", "mode",
             [](const RunConfig& c) { return std::string(to_string(c.geometry.mode)); },
             [](RunConfig& c, const std::string&, const std::string& v) {
               c.geometry.mode = mode_from_string(v);
             }},
      INT_KEY("geometry", "sense_contacts", geometry.sense_contacts, int),
      BOOL_KEY("geometry", "re_layer0", re_layer0),
      BOOL_KEY("geometry", "re_layer1", re_layer1),
      NUM_KEY("timing", "t_read", t_read),
      NUM_KEY("timing", "t_write_unit", t_write_unit),
      NUM_KEY("quant", "bits_per_cell", quant_bits_per_cell),
      INT_KEY("quant", "cells_per_weight", quant_cells_per_weight, int),
      INT_KEY("adc", "input_bits", adc.input_bits, int),
      NUM_KEY("adc", "v_read_max", adc.v_read_max),
      INT_KEY("adc", "output_bits", adc.output_bits, int),
      NUM_KEY("adc", "full_scale_current", adc.full_scale_current),
      NUM_KEY("read", "v_read", v_read),
      BOOL_KEY("read", "allow_above_threshold", allow_read_disturb),
      INT_KEY("experiments", "trials", trials, int),
      NUM_KEY("experiments", "sweep_v_max", sweep_v_max),
      INT_KEY("experiments", "sweep_points", sweep_points, int),
      NUM_KEY("experiments", "probe_v", probe_v),
      INT_KEY("experiments", "transient_steps", transient_steps, int),
      NUM_KEY("experiments", "hysteresis_amplitude", hysteresis_amplitude),
      KeyDef{"run", "seed",
             [](const RunConfig& c) { return std::to_string(c.seed); },
             [](RunConfig& c, const std::string& k, const std::string& v) {
               c.seed = parse_u64(k, v);
             }},
      KeyDef{"run", "out_dir", [](const RunConfig& c) { return c.out_dir; },
             [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
  };
  return defs;
}

#undef NUM_KEY
#undef INT_KEY
#undef BOOL_KEY

std::string valid_keys_for(const std::string& section) {
  std::string out;
  for (const KeyDef& d : key_defs())
    if (d.section == section) {
      if (!out.empty()) out += ", ";
      out += d.key;
    }
  return out;
}

std::string valid_sections() {
  std::string out;
  std::vector<std::string> seen;
  for (const KeyDef& d : key_defs())
    if (std::find(seen.begin(), seen.end(), d.section) == seen.end()) {
      seen.push_back(d.section);
      if (!out.empty()) out += ", ";
      out += d.section;
    }
  return out;
}

const KeyDef* find_key(const std::string& section, const std::string& key) {
  for (const KeyDef& d : key_defs())
    if (d.section == section && d.key == key) return &d;
  return nullptr;
}

void set_key(RunConfig& cfg, const std::string& section, const std::string& key,
             const std::string& value) {
  const KeyDef* def = find_key(section, key);
  if (def == nullptr) {
    const std::string keys = valid_keys_for(section);
    if (keys.empty())
      throw std::invalid_argument("config: unknown section '" + section +
                                  "' (valid sections: " + valid_sections() + ")");
    throw std::invalid_argument("config: unknown key '" + section + "." + key +
                                "' (valid keys in [" + section + "]: " + keys + ")");
  }
  def->set(cfg, section + "." + key, value);
}

}  // namespace

void RunConfig::validate() const {
  device.validate();
  transistor.validate();
  geometry.validate();
  if (geometry.layers == 2) validate_read_enable(geometry.mode, re_layer0, re_layer1);
  timing().validate();
  make_quant_scheme(quant_bits_per_cell, quant_cells_per_weight, device);
  if (adc.input_bits < 1 || adc.output_bits < 1)
    throw std::invalid_argument("adc: resolutions must be >= 1 bit");
  if (!(adc.v_read_max > 0.0) || !(adc.full_scale_current > 0.0))
    throw std::invalid_argument("adc: full-scale values must be > 0");
  if (!(v_read > 0.0) || v_read > adc.v_read_max)
    throw std::invalid_argument("read: requires 0 < v_read <= adc.v_read_max");
  if (v_read > device.v_th && !allow_read_disturb)
    throw std::invalid_argument(
        "read: v_read exceeds the switching threshold v_th; reads would disturb stored "
        "weights (set read.allow_above_threshold = true to override)");
  if (trials < 1) throw std::invalid_argument("experiments: trials must be >= 1");
  if (sweep_points < 2) throw std::invalid_argument("experiments: sweep_points must be >= 2");
  if (!(sweep_v_max > 0.0) || sweep_v_max > kSupplyVoltage)
    throw std::invalid_argument("experiments: requires 0 < sweep_v_max <= V_DD");
  if (!(probe_v > 0.0) || probe_v > device.v_th)
    throw std::invalid_argument("experiments: requires 0 < probe_v <= v_th");
  if (transient_steps < 1)
    throw std::invalid_argument("experiments: transient_steps must be >= 1");
  if (!(hysteresis_amplitude > 0.0) || hysteresis_amplitude > kSupplyVoltage)
    throw std::invalid_argument("experiments: requires 0 < hysteresis_amplitude <= V_DD");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section header at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected 'key = value' at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw std::invalid_argument("config: key '" + key + "' outside any [section] at line " +
                                  std::to_string(lineno));
    set_key(cfg, section, key, value);
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  RunConfig cfg = parse_config_text(buf.str());
  cfg.validate();
  return cfg;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override: expected section.key=value, got '" + assignment +
                                "'");
  const std::string path = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const std::size_t dot = path.find('.');
  if (dot == std::string::npos)
    throw std::invalid_argument("override: expected section.key=value, got '" + assignment +
                                "'");
  set_key(config, path.substr(0, dot), path.substr(dot + 1), value);
}

std::string config_to_text(const RunConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const KeyDef& d : key_defs()) {
    if (d.section != section) {
      if (!section.empty()) os << '\n';
      section = d.section;
      os << '[' << section << "]\n";
    }
    os << d.key << " = " << d.get(config) << '\n';
  }
  return os.str();
}

void write_config(const RunConfig& config, const std::filesystem::path& path) {
  write_text_atomic(path, config_to_text(config));
}

}  // namespace crosstack
