#include <iostream>

#include "qcqc/gateway.hpp"

int main(int argc, char** argv) { return qcqc::cli_dispatch(argc, argv, std::cout, std::cerr); }
