#include "commands.hpp"

int main(int argc, char** argv) { return rgctl::run(argc, argv); }
