#pragma once

#include <functional>

#include "alotune/types.hpp"

namespace alotune {

// Global worker cap for the column-blocked kernels below. Defaults to 1;
// callers (and the CLI --threads flag) opt in to more.
void set_max_threads(int n);
int max_threads();

// Width of one work slice. Fixed so the partitioning, and therefore every
// per-block floating point sum, is identical no matter how many workers run.
inline constexpr Index kColumnBlock = 256;

// Runs fn(begin, end) over [0, total) cut into kColumnBlock-wide slices.
// fn must only write to state owned by its slice; reductions happen in the
// caller after all slices finish.
void parallel_blocks(Index total, const std::function<void(Index, Index)>& fn);

}  // namespace alotune
