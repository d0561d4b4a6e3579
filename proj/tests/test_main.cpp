#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "sdpg/platform.hpp"

int main(int argc, char** argv) {
  sdpg::tune_allocator();
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
