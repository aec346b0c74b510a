#pragma once

namespace vosteer {

/// Selects between the OpenMP kernels and their serial reference loops. Both
/// produce identical results; the serial path exists for testing and for the
/// benchmark comparison.
enum class Execution { kSerial, kParallel };

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

}  // namespace vosteer
