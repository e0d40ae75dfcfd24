#include "camref/manifest.hpp"

#include <filesystem>
#include <set>
#include <stdexcept>

#include "camref/image.hpp"
#include "json.hpp"

namespace camref {

namespace {

std::string resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return fp.string();
    return (base / fp).lexically_normal().string();
}

}  // namespace

Manifest load_manifest(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    if (!j.is_array()) throw std::runtime_error(path + ": manifest must be a JSON array");
    std::filesystem::path base = std::filesystem::path(path).parent_path();

    Manifest m;
    std::set<std::string> seen;
    for (const auto& e : j) {
        ManifestEntry entry;
        entry.id = e.at("id").get<std::string>();
        if (entry.id.empty()) throw std::runtime_error(path + ": empty entry id");
        if (!seen.insert(entry.id).second)
            throw std::runtime_error(path + ": duplicate id '" + entry.id + "'");
        entry.image_path = resolve(base, e.at("image_path").get<std::string>());
        entry.score_path = resolve(base, e.at("score_path").get<std::string>());
        if (e.contains("gt_path") && !e["gt_path"].is_null())
            entry.gt_path = resolve(base, e["gt_path"].get<std::string>());
        entry.classes_present = e.at("classes_present").get<std::vector<int>>();
        if (entry.classes_present.empty())
            throw std::runtime_error(path + ": entry '" + entry.id + "' has no classes_present");
        for (const std::string& f : {entry.image_path, entry.score_path})
            if (!std::filesystem::exists(f))
                throw std::runtime_error(path + ": entry '" + entry.id + "' references missing file " + f);
        if (entry.gt_path && !std::filesystem::exists(*entry.gt_path))
            throw std::runtime_error(path + ": entry '" + entry.id + "' references missing file " +
                                     *entry.gt_path);
        m.entries.push_back(std::move(entry));
    }
    return m;
}

std::string encode_manifest(const Manifest& m) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : m.entries) {
        nlohmann::json je;
        je["id"] = e.id;
        je["image_path"] = e.image_path;
        je["score_path"] = e.score_path;
        if (e.gt_path) je["gt_path"] = *e.gt_path;
        je["classes_present"] = e.classes_present;
        j.push_back(std::move(je));
    }
    return j.dump(2) + "\n";
}

std::vector<std::string> load_class_names(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    if (!j.is_object()) throw std::runtime_error(path + ": class table must be a JSON object");
    int max_id = -1;
    for (auto& [key, val] : j.items()) {
        (void)val;
        max_id = std::max(max_id, std::stoi(key));
    }
    if (max_id < 0) throw std::runtime_error(path + ": empty class table");
    std::vector<std::string> names(size_t(max_id) + 1);
    for (size_t i = 0; i < names.size(); ++i) names[i] = "class" + std::to_string(i);
    for (auto& [key, val] : j.items()) names[size_t(std::stoi(key))] = val.get<std::string>();
    return names;
}

}  // namespace camref
