#include <cstdio>

int main() {
    std::puts("tsim: command-line interface not wired up yet");
    return 2;
}
