// Runs every acceptance criterion at full size and prints one verdict line each.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ommap/checks.hpp"

int main(int argc, char** argv) {
  ommap::CheckOptions options;
  options.work_dir = (std::filesystem::temp_directory_path() / "ommap_acceptance").string();
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));

  bool all_passed = true;
  for (const auto& r : ommap::run_checks(options, ids)) {
    std::cout << ommap::format_result(r) << std::endl;
    all_passed = all_passed && r.passed;
  }
  return all_passed ? 0 : 1;
}
