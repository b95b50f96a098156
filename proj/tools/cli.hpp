#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace biaslens::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kStrictViolation = 2;

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace biaslens::cli
