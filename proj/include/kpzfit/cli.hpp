#pragma once

#include <ostream>
#include <string>

namespace kpzfit::cli {

// Exit codes: 0 success, 1 numerical accuracy failure, 2 invalid input.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// 64-bit FNV-1a of the resolved configuration text, as hex.
std::string config_hash(const std::string& resolved);

}  // namespace kpzfit::cli
