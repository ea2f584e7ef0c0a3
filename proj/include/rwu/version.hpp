#pragma once

#ifndef RWU_GIT_DESCRIBE
#define RWU_GIT_DESCRIBE "v0.1.0"
#endif

namespace rwu {

inline constexpr const char* kVersion = "rwu " RWU_GIT_DESCRIBE;

}  // namespace rwu
