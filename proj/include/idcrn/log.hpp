#pragma once

#include <string>
#include <vector>

namespace idcrn {

// Non-fatal numerical conditions (zero-norm rows, empty columns, ...) are
// recorded here instead of aborting. The buffer is thread-local so that
// concurrent runs do not interleave their diagnostics.
void warn(std::string message);

// Returns and clears the calling thread's recorded warnings.
std::vector<std::string> take_warnings();

// When enabled, warnings are also echoed to stderr as they are recorded.
void set_warning_echo(bool enabled);

}  // namespace idcrn
