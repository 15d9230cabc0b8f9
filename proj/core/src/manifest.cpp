#include "slstm/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "slstm/errors.hpp"

namespace slstm {

std::string git_blob_sha1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path + " for hashing");
  const auto size = std::filesystem::file_size(path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("EVP_MD_CTX_new failed");
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  const std::string header = "blob " + std::to_string(size);
  EVP_DigestUpdate(ctx, header.data(), header.size() + 1);  // includes the NUL
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const std::vector<std::string>& data_files,
                             const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["tool"] = "slstm";
  m["command"] = command;
  m["config"] = config;
  m["data_files"] = nlohmann::json::array();
  for (const auto& f : data_files)
    m["data_files"].push_back({{"path", f},
                               {"bytes", std::filesystem::file_size(f)},
                               {"git_sha1", git_blob_sha1(f)}});
  m["outputs"] = outputs;
  return m;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path);
}

}  // namespace slstm
