// Placeholder during bring-up; the real implementation lands with the CLI.
#pragma once
#include <cstdio>

namespace obl {
inline int cli_main(int, char**) {
    std::puts("obl: not yet wired");
    return 0;
}
}  // namespace obl
