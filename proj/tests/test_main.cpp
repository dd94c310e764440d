#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "dcmr/runtime.hpp"

int main(int argc, char** argv) {
  dcmr::tune_allocator();
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
