#pragma once

#include <string_view>

namespace dpmnorm {

// git-describe style build identifier, fixed at configure time.
std::string_view version();

}  // namespace dpmnorm
