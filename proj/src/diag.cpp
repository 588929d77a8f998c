#include "imdd/diag.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace imdd::diag {

namespace {

std::mutex g_mutex;
WarningHandler g_handler;  // empty -> stderr

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard<std::mutex> lock(g_mutex);
    WarningHandler prev = std::move(g_handler);
    g_handler = std::move(handler);
    return prev;
}

void warn(const std::string& message) {
    std::lock_guard<std::mutex> lock(g_mutex);
    if (g_handler) {
        g_handler(message);
    } else {
        std::cerr << "[warn] " << message << "\n";
    }
}

}  // namespace imdd::diag
