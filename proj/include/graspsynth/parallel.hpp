#pragma once

namespace graspsynth::parallel {

/// Worker count for OpenMP regions. Honors GRASPSYNTH_THREADS (0 or unset
/// means the OpenMP default). Always >= 1.
int worker_threads();

/// Overrides the environment for the current process; 0 restores auto.
void set_worker_threads(int n);

}  // namespace graspsynth::parallel
