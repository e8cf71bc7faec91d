#include "dronecatch/catalog.h"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "dronecatch/error.h"

namespace dronecatch {

std::vector<ObjectSpec> DefaultCatalog() {
  // id, mass, bounciness, drag, angular_drag, radius
  return {
      {"paper_ball", 0.05, 0.10, 1.00, 0.05, 0.06},
      {"tennis_ball", 0.35, 0.90, 0.20, 0.05, 0.035},
      {"sponge", 0.45, 0.30, 0.80, 0.20, 0.05},
      {"apple", 0.50, 0.20, 0.10, 0.05, 0.04},
      {"rubber_ball", 0.55, 0.80, 0.05, 0.05, 0.06},
      {"mug", 0.60, 0.05, 0.05, 0.10, 0.05},
      {"book", 0.70, 0.00, 0.30, 0.30, 0.08},
      {"basketball", 0.62, 0.70, 0.00, 0.05, 0.12},
      {"vase", 0.90, 0.00, 0.10, 0.05, 0.08},
      {"statue", 2.50, 0.00, 0.00, 0.10, 0.10},
  };
}

std::vector<ObjectSpec> ParseCatalog(const std::string& text) {
  std::vector<ObjectSpec> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    ObjectSpec spec;
    if (!(fields >> spec.id >> spec.mass >> spec.bounciness >> spec.drag >>
          spec.angular_drag >> spec.radius)) {
      throw Error(ErrorKind::kParse,
                  "catalog line " + std::to_string(line_no) + ": expected 6 fields");
    }
    spec.Validate();
    out.push_back(spec);
  }
  return out;
}

std::string FormatCatalog(std::span<const ObjectSpec> catalog) {
  std::ostringstream out;
  out << "# id mass bounciness drag angular_drag radius\n";
  out << std::setprecision(17);
  for (const ObjectSpec& s : catalog) {
    out << s.id << ' ' << s.mass << ' ' << s.bounciness << ' ' << s.drag << ' '
        << s.angular_drag << ' ' << s.radius << '\n';
  }
  return out.str();
}

std::vector<ObjectSpec> LoadCatalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open catalog " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseCatalog(buf.str());
}

void SaveCatalog(const std::string& path, std::span<const ObjectSpec> catalog) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write catalog " + path);
  out << FormatCatalog(catalog);
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path);
}

const ObjectSpec& FindObject(std::span<const ObjectSpec> catalog, const std::string& id) {
  for (const ObjectSpec& s : catalog) {
    if (s.id == id) return s;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown object id '" + id + "'");
}

}  // namespace dronecatch
