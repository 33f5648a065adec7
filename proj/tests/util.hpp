#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "reggio/syntax.hpp"

inline std::string corpus_path(const std::string& name) { return std::string(REGGIO_CORPUS) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline reggio::Program corpus(const std::string& name) { return reggio::parse(slurp(corpus_path(name))); }
