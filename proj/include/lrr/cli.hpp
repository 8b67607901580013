#pragma once

#include <string>
#include <vector>

namespace lrr::cli {

/// Exit codes: 0 success, 1 unexpected failure, 2 bad flags, 3 data errors, 4 fit errors.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace lrr::cli
