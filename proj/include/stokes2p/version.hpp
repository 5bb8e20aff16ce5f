#pragma once

namespace stokes2p {

inline constexpr const char* version = "0.1.0";

} // namespace stokes2p
