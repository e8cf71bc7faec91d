#ifndef DRONECATCH_CATALOG_H_
#define DRONECATCH_CATALOG_H_

#include <span>
#include <string>
#include <vector>

#include "dronecatch/physics.h"

namespace dronecatch {

// Ten synthetic objects spanning mass 0.05-2.5 kg, bounciness 0-0.9 and
// drag 0-1 1/s.
std::vector<ObjectSpec> DefaultCatalog();

// Catalog text format: one object per line,
//   id mass bounciness drag angular_drag radius
// Blank lines and lines starting with '#' are ignored.
std::vector<ObjectSpec> ParseCatalog(const std::string& text);
std::string FormatCatalog(std::span<const ObjectSpec> catalog);
std::vector<ObjectSpec> LoadCatalog(const std::string& path);
void SaveCatalog(const std::string& path, std::span<const ObjectSpec> catalog);

const ObjectSpec& FindObject(std::span<const ObjectSpec> catalog, const std::string& id);

}  // namespace dronecatch

#endif  // DRONECATCH_CATALOG_H_
