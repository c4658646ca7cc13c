#ifndef TVDIST_VERSION_HPP
#define TVDIST_VERSION_HPP

namespace tvdist {
inline constexpr const char* kVersion = "0.1.0";
}

#endif
