// Runs the full acceptance battery and prints one verdict line per
// criterion.  Exit status 0 iff every criterion passes.

#include <smmslab/criteria.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#ifndef SMMS_LAB_BIN
#define SMMS_LAB_BIN ""
#endif

int main(int argc, char** argv) {
  unsigned long seed = 0;
  if (argc > 1) seed = std::strtoul(argv[1], nullptr, 10);

  const std::filesystem::path scratch =
      std::filesystem::temp_directory_path() / "smms_acceptance_scratch";
  std::filesystem::remove_all(scratch);
  std::filesystem::create_directories(scratch);

  std::string cli_binary = SMMS_LAB_BIN;
  if (!cli_binary.empty() && !std::filesystem::exists(cli_binary)) cli_binary.clear();

  const std::vector<smmslab::CriterionOutcome> outcomes =
      smmslab::run_all_criteria(scratch.string(), seed, cli_binary, &std::cout);

  int failures = 0;
  for (const auto& oc : outcomes)
    if (!oc.pass) ++failures;
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all " << outcomes.size() << " criteria passed" << std::endl;
  return 0;
}
