#include "exitbsde/verify.hpp"

#include <iostream>

int main(int argc, char** argv) {
  int threads = 1;
  if (argc > 1) threads = std::atoi(argv[1]);
  const exitbsde::AcceptanceReport rep = exitbsde::run_acceptance(threads, std::cout);
  std::cout << (rep.all_pass ? "ALL CRITERIA PASS" : "ACCEPTANCE FAILURE") << std::endl;
  return rep.all_pass ? 0 : 1;
}
