#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mis/errors.hpp"
#include "mis/merge_tree.hpp"

namespace mis {

namespace {

constexpr const char* kTreeFormat = "mis-merge-tree";
constexpr int kTreeVersion = 1;

}  // namespace

std::string tree_to_text(const MergeTree& tree, bool include_centroids) {
  validate_tree(tree);
  nlohmann::ordered_json doc;
  doc["format"] = kTreeFormat;
  doc["version"] = kTreeVersion;
  doc["n_leaves"] = tree.n_leaves;
  doc["grid_dims"] = {tree.height_patches, tree.width_patches};
  doc["patch_stride"] = tree.patch_stride;
  doc["connectivity_used"] = tree.connectivity_used;
  doc["rows"] = tree.rows;
  doc["sizes"] = tree.sizes;
  // nlohmann writes the shortest decimal that round-trips, so f64 values come
  // back bit-identical.
  doc["costs"] = tree.costs;
  const bool with_centroids = include_centroids && tree.has_centroids();
  doc["has_centroids"] = with_centroids;
  if (with_centroids) doc["centroids"] = tree.centroids;
  // One field per line, each value compact.
  std::string text = "{\n";
  bool first = true;
  for (const auto& [key, value] : doc.items()) {
    if (!first) text += ",\n";
    first = false;
    text += " " + nlohmann::json(key).dump() + ": " + value.dump();
  }
  return text + "\n}\n";
}

MergeTree tree_from_text(const std::string& text) {
  MergeTree tree;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != kTreeFormat) {
      throw FormatError("not a merge tree record");
    }
    if (doc.at("version").get<int>() != kTreeVersion) {
      throw FormatError("unsupported merge tree version");
    }
    tree.n_leaves = doc.at("n_leaves").get<std::uint32_t>();
    const auto dims = doc.at("grid_dims").get<std::vector<std::uint32_t>>();
    if (dims.size() != 2) throw FormatError("grid_dims must hold two values");
    tree.height_patches = dims[0];
    tree.width_patches = dims[1];
    tree.patch_stride = doc.value("patch_stride", 1u);
    tree.connectivity_used = doc.at("connectivity_used").get<bool>();
    tree.rows = doc.at("rows").get<std::vector<std::array<NodeId, 2>>>();
    tree.sizes = doc.at("sizes").get<std::vector<std::uint32_t>>();
    tree.costs = doc.at("costs").get<std::vector<double>>();
    if (doc.at("has_centroids").get<bool>()) {
      tree.centroids = doc.at("centroids").get<std::vector<std::vector<double>>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed merge tree record: ") + e.what());
  }
  validate_tree(tree);
  return tree;
}

void serialize_tree(const MergeTree& tree, const std::filesystem::path& path,
                    bool include_centroids) {
  const std::string text = tree_to_text(tree, include_centroids);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

MergeTree deserialize_tree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return tree_from_text(buffer.str());
}

}  // namespace mis
