/*
 * Copyright 2026 The survforest authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "survforest/serialize.hpp"

#include <zlib.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace survforest {

namespace {

using json = nlohmann::json;

json spec_to_json(const VariableSpec& v) {
  json j;
  j["name"] = v.name;
  j["kind"] = to_string(v.kind);
  if (!v.levels.empty()) j["levels"] = v.levels;
  return j;
}

VarKind kind_from_string(const std::string& s) {
  if (s == "continuous") return VarKind::kContinuous;
  if (s == "ordered-categorical") return VarKind::kOrderedCategorical;
  if (s == "unordered-categorical") return VarKind::kUnorderedCategorical;
  if (s == "boolean") return VarKind::kBoolean;
  throw validation_error("unknown variable kind '" + s + "'");
}

json node_to_json(const TreeNode& nd) {
  json j;
  j["depth"] = nd.depth;
  if (nd.terminal()) {
    j["grid"] = nd.grid;
    j["surv"] = nd.surv;
    j["chf"] = nd.chf;
  } else {
    json s;
    s["var"] = nd.split.var;
    if (nd.split.categorical) {
      s["left_levels"] = nd.split.left_levels;
    } else {
      s["value"] = nd.split.value;
    }
    j["split"] = s;
    j["children"] = {nd.left, nd.right};
  }
  return j;
}

bool is_gzip(const std::string& bytes) {
  return bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
         static_cast<unsigned char>(bytes[1]) == 0x8b;
}

std::string gzip_compress(const std::string& in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw std::runtime_error("deflateInit2 failed");
  }
  gz_header hdr{};  // all-zero header: no name, no mtime
  hdr.os = 255;
  deflateSetHeader(&zs, &hdr);
  std::string out;
  out.resize(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw std::runtime_error("gzip compression failed");
  out.resize(out.size() - zs.avail_out);
  return out;
}

std::string gzip_decompress(const std::string& in) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) {
    throw std::runtime_error("inflateInit2 failed");
  }
  std::string out;
  out.resize(in.size() * 4 + 1024);
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  std::size_t written = 0;
  for (;;) {
    zs.next_out = reinterpret_cast<Bytef*>(out.data() + written);
    zs.avail_out = static_cast<uInt>(out.size() - written);
    const int rc = inflate(&zs, Z_NO_FLUSH);
    written = out.size() - zs.avail_out;
    if (rc == Z_STREAM_END) break;
    if (rc == Z_OK || rc == Z_BUF_ERROR) {
      if (zs.avail_out == 0) {
        out.resize(out.size() * 2);
        continue;
      }
      if (rc == Z_BUF_ERROR) {
        inflateEnd(&zs);
        throw validation_error("truncated gzip stream");
      }
    } else {
      inflateEnd(&zs);
      throw validation_error("corrupt gzip stream");
    }
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

}  // namespace

std::string serialize_forest(const Forest& forest) {
  json doc;
  doc["schema_version"] = kForestSchemaVersion;
  doc["family"] = "surv";
  json cfg;
  cfg["ntree"] = forest.config.ntree;
  cfg["mtry"] = forest.config.mtry;
  cfg["nsplit"] = forest.config.nsplit;
  cfg["nodesize"] = forest.config.nodesize;
  cfg["seed"] = forest.config.seed;
  cfg["impute"] = forest.config.impute;
  doc["config"] = cfg;
  json vars = json::array();
  for (const auto& v : forest.variables) vars.push_back(spec_to_json(v));
  doc["variables"] = vars;
  doc["event_times"] = forest.event_times;
  doc["response"] = {{"time", forest.train_time},
                     {"status", forest.train_status}};
  json trees = json::array();
  for (const Tree& t : forest.trees) {
    json jt;
    jt["inbag"] = t.inbag;
    json nodes = json::array();
    for (const TreeNode& nd : t.nodes) nodes.push_back(node_to_json(nd));
    jt["nodes"] = nodes;
    // Terminal member slices in node order; internal slices are rebuilt.
    json members = json::array();
    for (const TreeNode& nd : t.nodes) {
      if (!nd.terminal()) continue;
      members.push_back(std::vector<std::uint32_t>(
          t.members.begin() + nd.member_begin,
          t.members.begin() + nd.member_begin + nd.member_count));
    }
    jt["terminal_members"] = members;
    trees.push_back(std::move(jt));
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

namespace {

// Rebuilds the pooled member layout: terminal slices are laid out in node
// order, and each internal node's slice spans its descendants.
void rebuild_members(Tree& tree,
                     const std::vector<std::vector<std::uint32_t>>& slices) {
  tree.members.clear();
  std::size_t next_slice = 0;
  for (auto& nd : tree.nodes) {
    if (nd.terminal()) {
      if (next_slice >= slices.size()) {
        throw validation_error("fewer terminal member slices than terminals");
      }
      nd.member_begin = static_cast<std::uint32_t>(tree.members.size());
      nd.member_count = static_cast<std::uint32_t>(slices[next_slice].size());
      tree.members.insert(tree.members.end(), slices[next_slice].begin(),
                          slices[next_slice].end());
      ++next_slice;
    }
  }
  if (next_slice != slices.size()) {
    throw validation_error("more terminal member slices than terminals");
  }
  // Preorder layout: an internal node's members start at its left child's
  // and extend over both subtrees. Walk backwards so children are done first.
  for (std::size_t i = tree.nodes.size(); i-- > 0;) {
    TreeNode& nd = tree.nodes[i];
    if (nd.terminal()) continue;
    const TreeNode& l = tree.nodes[static_cast<std::size_t>(nd.left)];
    const TreeNode& r = tree.nodes[static_cast<std::size_t>(nd.right)];
    nd.member_begin = l.member_begin;
    nd.member_count = l.member_count + r.member_count;
  }
}

}  // namespace

Forest deserialize_forest(const std::string& bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw validation_error(std::string("malformed forest document: ") +
                           e.what());
  }
  if (!doc.contains("schema_version") ||
      !doc["schema_version"].is_number_integer()) {
    throw validation_error("forest document lacks a schema_version");
  }
  const int version = doc["schema_version"].get<int>();
  if (version != kForestSchemaVersion) {
    throw validation_error("unsupported forest schema version " +
                           std::to_string(version) + " (expected " +
                           std::to_string(kForestSchemaVersion) + ")");
  }
  try {
    Forest f;
    const json& cfg = doc.at("config");
    f.config.ntree = cfg.at("ntree").get<std::uint32_t>();
    f.config.mtry = cfg.at("mtry").get<std::uint32_t>();
    f.config.nsplit = cfg.at("nsplit").get<std::uint32_t>();
    f.config.nodesize = cfg.at("nodesize").get<std::uint32_t>();
    f.config.seed = cfg.at("seed").get<std::uint64_t>();
    f.config.impute = cfg.at("impute").get<bool>();
    for (const json& jv : doc.at("variables")) {
      VariableSpec v;
      v.name = jv.at("name").get<std::string>();
      v.kind = kind_from_string(jv.at("kind").get<std::string>());
      if (jv.contains("levels")) {
        v.levels = jv.at("levels").get<std::vector<std::string>>();
      }
      f.variables.push_back(std::move(v));
    }
    f.event_times = doc.at("event_times").get<std::vector<double>>();
    f.train_time = doc.at("response").at("time").get<std::vector<double>>();
    f.train_status =
        doc.at("response").at("status").get<std::vector<std::uint8_t>>();
    for (const json& jt : doc.at("trees")) {
      Tree t;
      t.inbag = jt.at("inbag").get<std::vector<std::uint32_t>>();
      for (const json& jn : jt.at("nodes")) {
        TreeNode nd;
        nd.depth = jn.at("depth").get<std::uint32_t>();
        if (jn.contains("split")) {
          const json& js = jn.at("split");
          nd.split.var = js.at("var").get<std::uint32_t>();
          if (js.contains("left_levels")) {
            nd.split.categorical = true;
            nd.split.left_levels = js.at("left_levels").get<std::uint64_t>();
          } else {
            nd.split.categorical = false;
            nd.split.value = js.at("value").get<double>();
          }
          nd.left = jn.at("children").at(0).get<std::int32_t>();
          nd.right = jn.at("children").at(1).get<std::int32_t>();
        } else {
          nd.grid = jn.at("grid").get<std::vector<std::uint32_t>>();
          nd.surv = jn.at("surv").get<std::vector<double>>();
          nd.chf = jn.at("chf").get<std::vector<double>>();
          t.max_terminal_depth = std::max(t.max_terminal_depth, nd.depth);
        }
        t.nodes.push_back(std::move(nd));
      }
      rebuild_members(
          t, jt.at("terminal_members")
                 .get<std::vector<std::vector<std::uint32_t>>>());
      f.trees.push_back(std::move(t));
    }
    if (f.trees.size() != f.config.ntree) {
      throw validation_error("tree count does not match config.ntree");
    }
    return f;
  } catch (const json::exception& e) {
    throw validation_error(std::string("invalid forest document: ") + e.what());
  }
}

void save_forest(const Forest& forest, const std::string& path, bool gzip) {
  const bool gz = gzip || (path.size() > 3 &&
                           path.compare(path.size() - 3, 3, ".gz") == 0);
  std::string bytes = serialize_forest(forest);
  if (gz) bytes = gzip_compress(bytes);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw validation_error("cannot write file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Forest load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string bytes = ss.str();
  if (is_gzip(bytes)) bytes = gzip_decompress(bytes);
  return deserialize_forest(bytes);
}

}  // namespace survforest
