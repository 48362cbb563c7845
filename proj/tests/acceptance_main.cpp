// Runs every acceptance criterion at full size and prints one line each.
// Arguments, if any, select criteria by key or number.

#include <iostream>

#include "roughsheet/acceptance.hpp"

int main(int argc, char** argv) {
  roughsheet::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i) options.only.emplace_back(argv[i]);
  try {
    bool allPass = true;
    roughsheet::run_acceptance(options, [&](const roughsheet::CriterionResult& r) {
      std::cout << roughsheet::format_result_line(r) << std::endl;
      allPass = allPass && r.pass;
    });
    return allPass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << "\n";
    return 2;
  }
}
