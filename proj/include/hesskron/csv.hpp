#ifndef HESSKRON_CSV_HPP
#define HESSKRON_CSV_HPP

#include "hesskron/errors.hpp"

#include <cstdio>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

namespace hesskron {

// Comma-separated, '.' decimal, header row, LF line endings. Doubles are
// printed with 17 significant digits so f64 values round-trip bit-faithfully.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary) {
        if (!out_) throw io_error("cannot write " + path);
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_.put(',');
            out_ << header[i];
        }
        out_.put('\n');
    }

    template <typename... Ts>
    void row(const Ts&... fields) {
        bool first = true;
        (write_field(fields, first), ...);
        out_.put('\n');
    }

private:
    template <typename T>
    void write_field(const T& value, bool& first) {
        if (!first) out_.put(',');
        first = false;
        if constexpr (std::is_floating_point_v<T>) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(value));
            out_ << buf;
        } else {
            out_ << value;
        }
    }

    std::ofstream out_;
};

} // namespace hesskron

#endif
