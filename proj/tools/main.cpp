#include "smbsde/cli.hpp"

int main(int argc, char** argv) { return smbsde::cli::main_entry(argc, argv); }
