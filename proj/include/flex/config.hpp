#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flex/types.hpp"

namespace flex {

// Flat key-value configuration with [section] headers, '#' comments and
// comma-separated vector values. Keys keep insertion-independent canonical
// order (std::map), which makes the hash stable.
class Config {
 public:
  Config() = default;

  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key,
           const std::string& value);

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& section,
                             const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  long get_long(const std::string& section, const std::string& key,
                long fallback) const;
  std::uint64_t get_seed(const std::string& section, const std::string& key,
                         std::uint64_t fallback) const;
  VectorXd get_vector(const std::string& section, const std::string& key,
                      const VectorXd& fallback) const;
  std::vector<int> get_int_list(const std::string& section,
                                const std::string& key) const;

  // Canonical text form: sorted sections and keys, one "section.key=value"
  // per line. The identity hash excludes the seed and output keys so all
  // seeds of one experiment cell share a hash.
  std::string canonical() const;
  std::uint64_t identity_hash() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

std::uint64_t fnv1a64(const std::string& text);

}  // namespace flex
