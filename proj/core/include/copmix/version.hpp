#ifndef COPMIX_VERSION_HPP
#define COPMIX_VERSION_HPP

namespace copmix {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace copmix

#endif  // COPMIX_VERSION_HPP
