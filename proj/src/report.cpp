#include "mbl/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mbl {

std::string format_double(double v) {
    if (std::isnan(v)) return "null";
    if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 8);
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    return out;
}

void JsonWriter::pre_value() {
    if (after_key_) {
        after_key_ = false;
        return;
    }
    if (!needs_comma_.empty()) {
        if (needs_comma_.back()) buf_ += ',';
        needs_comma_.back() = true;
    }
}

JsonWriter& JsonWriter::begin_object() {
    pre_value();
    buf_ += '{';
    needs_comma_.push_back(false);
    return *this;
}

JsonWriter& JsonWriter::end_object() {
    buf_ += '}';
    needs_comma_.pop_back();
    return *this;
}

JsonWriter& JsonWriter::begin_array() {
    pre_value();
    buf_ += '[';
    needs_comma_.push_back(false);
    return *this;
}

JsonWriter& JsonWriter::end_array() {
    buf_ += ']';
    needs_comma_.pop_back();
    return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
    if (!needs_comma_.empty()) {
        if (needs_comma_.back()) buf_ += ',';
        needs_comma_.back() = true;
    }
    buf_ += '"';
    buf_ += json_escape(k);
    buf_ += "\":";
    after_key_ = true;
    return *this;
}

JsonWriter& JsonWriter::value(double v) {
    pre_value();
    buf_ += format_double(v);
    return *this;
}

JsonWriter& JsonWriter::value(int v) {
    pre_value();
    buf_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::value(std::size_t v) {
    pre_value();
    buf_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::value(bool v) {
    pre_value();
    buf_ += v ? "true" : "false";
    return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
    pre_value();
    buf_ += '"';
    buf_ += json_escape(v);
    buf_ += '"';
    return *this;
}

JsonWriter& JsonWriter::value(const char* v) { return value(std::string(v)); }

JsonWriter& JsonWriter::raw_null() {
    pre_value();
    buf_ += "null";
    return *this;
}

JsonWriter& JsonWriter::numbers(const std::vector<double>& vs) {
    begin_array();
    for (double v : vs) value(v);
    return end_array();
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail("IoError", "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) fail("IoError", "short write to " + tmp.string());
    }
    fs::rename(tmp, p);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("IoError", "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace mbl
