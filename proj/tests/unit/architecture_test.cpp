#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "swtrain/io.hpp"

namespace fs = std::filesystem;

namespace {

std::set<std::string> files_containing(const std::string& needle) {
  std::set<std::string> hits;
  const fs::path root = SWTRAIN_SOURCE_DIR;
  for (const auto* dir : {"core", "tools"}) {
    for (const auto& e : fs::recursive_directory_iterator(root / dir)) {
      auto ext = e.path().extension();
      if (!e.is_regular_file() || (ext != ".cpp" && ext != ".hpp")) continue;
      if (swtrain::io::read_file(e.path()).find(needle) != std::string::npos) {
        hits.insert(fs::relative(e.path(), root).generic_string());
      }
    }
  }
  return hits;
}

}  // namespace

// Model traffic goes through the gateway; only the OpenAI provider opens
// outbound HTTP connections.
TEST(Architecture, OnlyTheProviderIsAnHttpClient) {
  EXPECT_EQ(files_containing("httplib::Client"), (std::set<std::string>{"core/src/openai_provider.cpp"}));
  EXPECT_EQ(files_containing("#include <httplib.h>"),
            (std::set<std::string>{"core/src/http_api.cpp", "core/src/openai_provider.cpp"}));
}

TEST(Architecture, PublicHeadersDoNotExposeVendoredHttp) {
  for (const auto& f : files_containing("httplib")) EXPECT_EQ(f.find("include/"), std::string::npos) << f;
}
