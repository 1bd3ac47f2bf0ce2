#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stochls {

// 17 significant digits, round-trips doubles
std::string format_real(double v);

std::string csv_line(const std::vector<std::string>& cells);
std::vector<std::string> split_csv_line(const std::string& line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
// writes atomically: temp file then rename
void write_text_file(const std::string& path, const std::string& content);

}  // namespace stochls
