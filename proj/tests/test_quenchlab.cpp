#include <catch2/catch_amalgamated.hpp>
#include "soqdyn/soqdyn.hpp"

TEST_CASE("placeholder") { CHECK(true); }
