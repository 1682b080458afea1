// SPDX-License-Identifier: Apache-2.0
// Reports the target-test UAR difference between two training histories.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "agcc/agcc.h"

int main(int argc, char** argv) {
  CLI::App app{"Compare two history.jsonl files written by `agcc train`"};
  std::string a, b;
  app.add_option("baseline", a, "history of the reference run")->required();
  app.add_option("candidate", b, "history of the run being compared")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  char* json = nullptr;
  const agcc_status st = agcc_compare_histories(a.c_str(), b.c_str(), &json);
  if (st != AGCC_OK) {
    std::cerr << "error: " << agcc_last_error() << "\n";
    return agcc_exit_code(st);
  }
  std::cout << json << "\n";
  agcc_string_free(json);
  return 0;
}
