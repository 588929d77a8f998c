#pragma once

#include <functional>
#include <string>

namespace imdd::diag {

using WarningHandler = std::function<void(const std::string&)>;

// Installs a process-wide warning sink. Passing nullptr restores the
// default (stderr). Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

// Emits a non-fatal diagnostic through the installed handler.
// Thread-safe; calls are serialized.
void warn(const std::string& message);

}  // namespace imdd::diag
