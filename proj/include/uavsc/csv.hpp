#ifndef UAVSC_CSV_HPP
#define UAVSC_CSV_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace uavsc::csv {

/// Shortest decimal form that parses back to the same double, so repeated
/// runs produce byte-identical files.
std::string format_double(double value);

/// Header-then-rows CSV writer that flushes after every row, keeping the
/// file parseable if the run is interrupted.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace uavsc::csv

#endif  // UAVSC_CSV_HPP
