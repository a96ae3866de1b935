#include "msgfem/config.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace msgfem {

namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v)
{
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Config, "key '" + key + "' expects a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v)
{
  const double d = to_double(key, v);
  if (d != static_cast<double>(static_cast<int>(d)))
    throw Error(ErrorCode::Config, "key '" + key + "' expects an integer, got '" + v + "'");
  return static_cast<int>(d);
}

}  // namespace

const std::vector<std::string>& known_config_keys()
{
  static const std::vector<std::string> keys = {
      "mesh.n",
      "problem.kind", "problem.coefficient", "problem.a", "problem.cells", "problem.lo", "problem.hi",
      "problem.seed", "problem.f", "problem.g", "problem.k", "problem.V", "problem.beta", "problem.b",
      "cover.mx", "cover.my", "cover.overlap", "cover.oversampling",
      "spectral.n_per_subdomain", "spectral.tau", "spectral.n_list", "spectral.filter",
      "solver.route",
      "study.subdomain", "study.oversampling_list", "study.n_min", "study.n_max", "study.min_r2",
      "study.assert_monotone", "study.compare_k0", "study.samples", "study.modes", "study.d", "study.d_star",
      "study.resolutions", "study.stability_tol", "study.box1", "study.box2", "study.tolerances",
      "study.fit_lo", "study.fit_hi", "study.n_ev", "study.tol", "study.seed",
      "output.path",
  };
  return keys;
}

RunConfig RunConfig::parse(const std::string& text)
{
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": empty key or value");
    if (cfg.has(key)) throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.set(key, value);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void RunConfig::set(const std::string& key, const std::string& value)
{
  const auto& keys = known_config_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw Error(ErrorCode::Config, "unknown key '" + key + "'");
  values_[key] = value;
}

std::string RunConfig::str(const std::string& key, const std::string& fallback) const
{
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string RunConfig::str(const std::string& key) const
{
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::Config, "missing key '" + key + "'");
  return it->second;
}

double RunConfig::num(const std::string& key, double fallback) const
{
  return has(key) ? to_double(key, str(key)) : fallback;
}

double RunConfig::num(const std::string& key) const { return to_double(key, str(key)); }

int RunConfig::integer(const std::string& key, int fallback) const
{
  return has(key) ? to_int(key, str(key)) : fallback;
}

int RunConfig::integer(const std::string& key) const { return to_int(key, str(key)); }

bool RunConfig::flag(const std::string& key, bool fallback) const
{
  if (!has(key)) return fallback;
  const std::string v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::Config, "key '" + key + "' expects true or false");
}

std::vector<double> RunConfig::nums(const std::string& key, const std::vector<double>& fallback) const
{
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& item : split(str(key))) out.push_back(to_double(key, item));
  return out;
}

std::vector<int> RunConfig::integers(const std::string& key, const std::vector<int>& fallback) const
{
  if (!has(key)) return fallback;
  std::vector<int> out;
  for (const auto& item : split(str(key))) out.push_back(to_int(key, item));
  return out;
}

std::string RunConfig::hash() const
{
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& [k, v] : values_) {
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace msgfem
