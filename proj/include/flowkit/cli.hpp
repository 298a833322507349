#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace flowkit {

/// Entry point of the `flowkit` binary; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

/// `--data` if given, else $FLOWKIT_DATA, else ./flowkit-data.
std::filesystem::path resolve_data_dir(const std::optional<std::string>& flag);

}  // namespace flowkit
