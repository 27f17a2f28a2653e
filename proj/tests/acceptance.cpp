#include "soqdyn/soqdyn.hpp"
#include <cstdio>
int main() { std::printf("acceptance placeholder\n"); return 0; }
