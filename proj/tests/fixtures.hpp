#pragma once

// Shared test fixtures.

#include <unistd.h>

#include <filesystem>
#include <string>

namespace fixtures {

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("sciner_" + name + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

inline const std::string kProceedingsBib = R"bib(@proceedings{proc-2023-sanskrit,
  title = "Proceedings of the Computational (S)anskrit (V6) Digital Humanities: Selected Papers",
  editor = "Mulkarni, Amba and
  Helliwig, Oliver",
  month = jan,
  year = "2023",
  address = "Canberra, Australia (Online mode)",
  publisher = "Association for Computational Linguistics",
  url = "https://aclanthology.org/2023-wsc-csdh.e",
}
)bib";

inline const std::string kProceedingsCsv =
    "Unnamed: 0,title,editor,month,year,address,publisher,url,author,booktitle,pages\n"
    "0,Proceedings of the Computational (S)anskrit (V6) Digital Humanities: Selected Papers,"
    "\"Mulkarni, Amba and Helliwig, Oliver\",Jan,2023,\"Canberra, Australia (Online mode)\","
    "Association for Computational Linguistics,https://aclanthology.org/2023-wsc-csdh.e,,,\n";

}  // namespace fixtures
