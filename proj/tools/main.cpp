#include "condfilter/cli.hpp"

int main(int argc, char** argv) { return condfilter::dispatch(argc, argv); }
