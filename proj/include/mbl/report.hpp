#ifndef MBL_REPORT_HPP
#define MBL_REPORT_HPP

#include <string>
#include <vector>

#include "mbl/common.hpp"

namespace mbl {

/// Deterministic JSON emitter: insertion-ordered keys, doubles rendered with
/// 17 significant digits so payloads are byte-stable across runs.
class JsonWriter {
public:
    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array();
    JsonWriter& end_array();
    JsonWriter& key(const std::string& k);
    JsonWriter& value(double v);
    JsonWriter& value(int v);
    JsonWriter& value(std::size_t v);
    JsonWriter& value(bool v);
    JsonWriter& value(const std::string& v);
    JsonWriter& value(const char* v);
    JsonWriter& raw_null();

    template <typename T>
    JsonWriter& kv(const std::string& k, const T& v) {
        key(k);
        return value(v);
    }
    JsonWriter& numbers(const std::vector<double>& vs);

    const std::string& str() const { return buf_; }

private:
    void pre_value();
    std::string buf_;
    std::vector<bool> needs_comma_;
    bool after_key_ = false;
};

std::string format_double(double v);
std::string json_escape(const std::string& s);

/// write-temp-then-rename; creates parent directories.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

} // namespace mbl

#endif
