#include "sata/harness/export.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sata/error.hpp"
#include "sata/harness/fs.hpp"

namespace sata::harness {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// run.seed from the frozen config next to the metrics, or empty when absent.
std::string seed_of(const std::filesystem::path& run_dir) {
  const auto ini = run_dir / "config.ini";
  if (!std::filesystem::exists(ini)) return {};
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(ini.string(), tree);
  } catch (const boost::property_tree::ini_parser_error&) {
    return {};
  }
  return tree.get<std::string>("run.seed", "");
}

}  // namespace

std::size_t export_tidy(const std::filesystem::path& root, const std::filesystem::path& output) {
  std::vector<std::filesystem::path> sources;
  if (std::filesystem::is_directory(root)) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == "metrics.csv") sources.push_back(entry.path());
    }
  }
  std::sort(sources.begin(), sources.end());

  std::string out = "run,seed,iteration,metric,value\n";
  std::size_t rows = 0;
  for (const auto& path : sources) {
    const auto run_dir = path.parent_path();
    std::string run = std::filesystem::relative(run_dir, root).generic_string();
    if (run == ".") run = run_dir.filename().string();
    const std::string seed = seed_of(run_dir);

    std::istringstream in(fs::read_file(path));
    std::string line;
    if (!std::getline(in, line)) continue;
    const std::vector<std::string> header = split_csv(line);
    const auto it_col = std::find(header.begin(), header.end(), "iteration");
    if (it_col == header.end()) throw FormatError(path.string() + ": no iteration column");
    const auto it_index = static_cast<std::size_t>(it_col - header.begin());
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const std::vector<std::string> cells = split_csv(line);
      if (cells.size() != header.size()) throw FormatError(path.string() + ": ragged row");
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c == it_index) continue;
        out += run + "," + seed + "," + cells[it_index] + "," + header[c] + "," + cells[c] + "\n";
        ++rows;
      }
    }
  }
  fs::write_atomic(output, out);
  return rows;
}

}  // namespace sata::harness
