#pragma once

#include <optional>
#include <string>
#include <vector>

namespace camref {

struct ManifestEntry {
    std::string id;
    std::string image_path;
    std::string score_path;
    std::optional<std::string> gt_path;
    std::vector<int> classes_present;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
};

// Loads a manifest (JSON array of entry objects). Relative paths are resolved
// against the manifest's directory. Rejects duplicate ids, empty
// classes_present, and entries whose referenced files do not exist.
Manifest load_manifest(const std::string& path);

// Serializes entries with paths as given (callers pass relative paths when
// writing datasets, so directories stay relocatable).
std::string encode_manifest(const Manifest& m);

// Class-name table from a JSON object {"<id>": "<name>", ...}. The result is
// indexed by class id and sized max_id+1; unnamed ids get "class<i>".
std::vector<std::string> load_class_names(const std::string& path);

}  // namespace camref
