// Regenerates the committed golden tables: golden_gen <output dir>.
// Inspect diffs before committing; the values encode published results.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "support/goldens.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: golden_gen <output dir>\n";
    return 2;
  }
  const std::filesystem::path dir(argv[1]);
  std::filesystem::create_directories(dir);
  for (const auto& c : testsupport::golden_tables()) {
    const auto path = dir / (c.name + ".md");
    std::ofstream out(path, std::ios::binary);
    out << poseval::report::to_markdown(c.table);
    std::cout << path.string() << "\n";
  }
  return 0;
}
