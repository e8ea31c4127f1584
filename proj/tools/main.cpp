#include "cardiomech/cli.hpp"

int main(int argc, char** argv) { return cardiomech::run_cli(argc, argv); }
