#pragma once

namespace smfsync {

/// Selects between the OpenMP kernel and its serial reference.
enum class Execution { Serial, Parallel };

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

}  // namespace smfsync
