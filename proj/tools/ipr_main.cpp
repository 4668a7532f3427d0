#include <cstdio>

int main(int, char**) {
  std::puts("ipr: subcommands not wired up yet");
  return 2;
}
