#include <iostream>

#include "bellqma/experiment.h"

int main(int argc, char** argv) { return bellqma::experiment::main_cli(argc, argv, std::cout, std::cerr); }
