#include "xicm/cli.hpp"

int main(int argc, char** argv) { return xicm::dispatch(argc, argv); }
