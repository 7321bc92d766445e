#include "flex/config.hpp"

#include <fstream>
#include <sstream>

namespace flex {

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("Config: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

Config Config::parse_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section = "run";
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("Config: bad section header at line " +
                                    std::to_string(line_no));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("Config: missing '=' at line " +
                                  std::to_string(line_no));
    }
    cfg.sections_[section][trim(line.substr(0, eq))] =
        trim(line.substr(eq + 1));
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  sections_[section][key] = value;
}

std::string Config::get_string(const std::string& section,
                               const std::string& key,
                               const std::string& fallback) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::string Config::require_string(const std::string& section,
                                   const std::string& key) const {
  if (!has(section, key)) {
    throw std::invalid_argument("Config: missing " + section + "." + key);
  }
  return get_string(section, key, "");
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  return std::stod(get_string(section, key, ""));
}

long Config::get_long(const std::string& section, const std::string& key,
                      long fallback) const {
  if (!has(section, key)) return fallback;
  return std::stol(get_string(section, key, ""));
}

std::uint64_t Config::get_seed(const std::string& section,
                               const std::string& key,
                               std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  return std::stoull(get_string(section, key, ""));
}

VectorXd Config::get_vector(const std::string& section, const std::string& key,
                            const VectorXd& fallback) const {
  if (!has(section, key)) return fallback;
  const std::string text = get_string(section, key, "");
  std::vector<double> values;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) values.push_back(std::stod(item));
  }
  VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = values[i];
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& section,
                                      const std::string& key) const {
  std::vector<int> values;
  const std::string text = get_string(section, key, "");
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) values.push_back(std::stoi(item));
  }
  return values;
}

std::string Config::canonical() const {
  std::ostringstream out;
  for (const auto& [section, entries] : sections_) {
    for (const auto& [key, value] : entries) {
      out << section << "." << key << "=" << value << "\n";
    }
  }
  return out.str();
}

std::uint64_t Config::identity_hash() const {
  std::ostringstream out;
  for (const auto& [section, entries] : sections_) {
    if (section == "output") continue;
    for (const auto& [key, value] : entries) {
      if (section == "run" && key == "seed") continue;
      out << section << "." << key << "=" << value << "\n";
    }
  }
  return fnv1a64(out.str());
}

}  // namespace flex
