#ifndef GMLAB_VERSION_HPP
#define GMLAB_VERSION_HPP

namespace gmlab {

inline constexpr const char* kVersion = "1.0.0";

}

#endif
