#ifndef MBL_VERSION_HPP
#define MBL_VERSION_HPP

namespace mbl {
inline constexpr const char* toolkit_version = "0.1.0";
inline constexpr const char* report_schema = "mbl-report/1";
}

#endif
