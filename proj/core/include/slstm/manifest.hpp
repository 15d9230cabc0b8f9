#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace slstm {

/// SHA-1 over "blob <size>\0" + content, as git hashes file objects.
std::string git_blob_sha1(const std::string& path);

/// Run record: command, config, seeds, data file hashes, outputs.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const std::vector<std::string>& data_files,
                             const std::vector<std::string>& outputs);

void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace slstm
