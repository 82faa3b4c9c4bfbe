#pragma once

#include <string>
#include <vector>

namespace deepalign {

enum class Variant { none, C, E, CE };

Variant parse_variant(const std::string& text);
std::string to_string(Variant v);
bool variant_uses_case_attributes(Variant v);
bool variant_uses_event_attributes(Variant v);

// Entry point behind the binary. Exit codes: 0 success, 1 runtime failure,
// 2 usage error.
int run_cli(const std::vector<std::string>& args);

}  // namespace deepalign
