#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace graspsynth {

/// Input violates a documented invariant (geometry, material, config ranges).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Query outside a calibrated or sampled domain. Extrapolation is refused.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Root finding, Newton iteration or a singular expression failed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Routes non-fatal diagnostics (e.g. Cardano/continuation disagreement).
/// The default sink writes to std::clog; pass an empty function to silence.
void set_warning_sink(std::function<void(std::string_view)> sink);
void warn(std::string_view message);

}  // namespace graspsynth
