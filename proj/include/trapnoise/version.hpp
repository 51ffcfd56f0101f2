#ifndef TRAPNOISE_VERSION_HPP
#define TRAPNOISE_VERSION_HPP

namespace trapnoise {

inline constexpr const char* kVersion = "0.1.0";

} // namespace trapnoise

#endif
