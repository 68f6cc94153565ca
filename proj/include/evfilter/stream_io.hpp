#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>

#include "evfilter/error.hpp"
#include "evfilter/event.hpp"

namespace evf {

enum class StreamFormat { Csv, Bin };

inline StreamFormat format_from_path(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0) return StreamFormat::Bin;
    return StreamFormat::Csv;
}

inline constexpr std::string_view kCsvHeader = "t_us,x,y,p,label";
inline constexpr std::array<char, 4> kBinMagic = {'E', 'V', 'F', '1'};

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(char(v & 0xFF));
    out.push_back(char((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_le(const unsigned char* p, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
}

template <typename Int>
inline bool parse_int(std::string_view field, Int& out) {
    if (field.empty()) return false;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

} // namespace detail

/// Incremental event reader; validates every record (field syntax, pixel
/// bounds, timestamp order) as it goes so malformed files fail fast with
/// the offending record index.
class StreamReader {
public:
    /// CSV files carry no geometry, so the caller supplies it there;
    /// binary files embed their own and ignore `csv_geometry`.
    StreamReader(const std::string& path, StreamFormat format,
                 SensorGeometry csv_geometry = SensorGeometry{}, bool allow_unsorted = false)
        : format_(format), allow_unsorted_(allow_unsorted) {
        file_.open(path, std::ios::binary);
        if (!file_) throw Error(ErrorCode::IoFailure, "cannot open " + path);
        if (format_ == StreamFormat::Csv) {
            geometry_ = csv_geometry;
            std::string header;
            if (!std::getline(file_, header) || header != kCsvHeader) {
                throw Error(ErrorCode::MalformedRecord, "missing or bad CSV header in " + path);
            }
        } else {
            read_bin_header(path);
        }
    }

    const SensorGeometry& geometry() const { return geometry_; }

    /// Remaining event count for binary inputs; -1 for CSV (unknown upfront).
    std::int64_t declared_count() const { return format_ == StreamFormat::Bin ? std::int64_t(bin_count_) : -1; }

    bool next(LabeledEvent& out) {
        if (format_ == StreamFormat::Csv) {
            if (!next_csv(out)) return false;
        } else {
            if (!next_bin(out)) return false;
        }
        if (!geometry_.contains(out.event.x, out.event.y)) {
            throw Error(ErrorCode::OutOfBounds, "pixel outside geometry", index_);
        }
        if (!allow_unsorted_ && index_ > 0 && out.event.t < prev_t_) {
            throw Error(ErrorCode::NonMonotonic, "timestamp regression", index_);
        }
        prev_t_ = out.event.t;
        ++index_;
        return true;
    }

private:
    void read_bin_header(const std::string& path) {
        std::array<char, 4> magic{};
        file_.read(magic.data(), 4);
        if (!file_ || magic != kBinMagic) {
            throw Error(ErrorCode::MalformedRecord, "bad magic in " + path);
        }
        unsigned char head[16];
        file_.read(reinterpret_cast<char*>(head), 16);
        if (!file_) throw Error(ErrorCode::MalformedRecord, "truncated header in " + path);
        std::uint32_t w = std::uint32_t(detail::get_le(head, 4));
        std::uint32_t h = std::uint32_t(detail::get_le(head + 4, 4));
        bin_count_ = detail::get_le(head + 8, 8);
        if (w == 0 || h == 0 || w > 0xFFFF || h > 0xFFFF) {
            throw Error(ErrorCode::MalformedRecord, "bad geometry in " + path);
        }
        geometry_.width = std::uint16_t(w);
        geometry_.height = std::uint16_t(h);
    }

    bool next_csv(LabeledEvent& out) {
        std::string line;
        if (!std::getline(file_, line)) return false;
        if (line.empty() && file_.eof()) return false;
        std::string_view rest(line);
        std::string_view field[5];
        for (int i = 0; i < 4; ++i) {
            auto comma = rest.find(',');
            if (comma == std::string_view::npos) {
                throw Error(ErrorCode::MalformedRecord, "expected 5 fields", index_);
            }
            field[i] = rest.substr(0, comma);
            rest.remove_prefix(comma + 1);
        }
        if (rest.find(',') != std::string_view::npos) {
            throw Error(ErrorCode::MalformedRecord, "expected 5 fields", index_);
        }
        field[4] = rest;

        std::int64_t t = 0;
        std::uint32_t x = 0, y = 0, p = 0;
        if (!detail::parse_int(field[0], t) || t < 0) {
            throw Error(ErrorCode::MalformedRecord, "bad timestamp field", index_);
        }
        if (!detail::parse_int(field[1], x) || !detail::parse_int(field[2], y)) {
            throw Error(ErrorCode::MalformedRecord, "bad coordinate field", index_);
        }
        if (!detail::parse_int(field[3], p) || p > 1) {
            throw Error(ErrorCode::MalformedRecord, "bad polarity field", index_);
        }
        Label label;
        if (field[4].size() != 1 || !label_from_char(field[4][0], label)) {
            throw Error(ErrorCode::MalformedRecord, "bad label field", index_);
        }
        if (x > 0xFFFF || y > 0xFFFF) {
            throw Error(ErrorCode::OutOfBounds, "pixel outside geometry", index_);
        }
        out.event = Event{t, std::uint16_t(x), std::uint16_t(y), std::uint8_t(p)};
        out.label = label;
        return true;
    }

    bool next_bin(LabeledEvent& out) {
        if (read_ == bin_count_) {
            // one extra probe so trailing garbage is rejected, not ignored
            char probe;
            if (file_.read(&probe, 1)) {
                throw Error(ErrorCode::MalformedRecord, "trailing bytes after declared event count");
            }
            return false;
        }
        unsigned char rec[14];
        file_.read(reinterpret_cast<char*>(rec), 14);
        if (!file_) throw Error(ErrorCode::MalformedRecord, "truncated record", index_);
        std::uint64_t t = detail::get_le(rec, 8);
        if (t > std::uint64_t(INT64_MAX)) {
            throw Error(ErrorCode::MalformedRecord, "timestamp overflow", index_);
        }
        std::uint8_t p = rec[12];
        std::uint8_t lab = rec[13];
        if (p > 1 || lab > 2) throw Error(ErrorCode::MalformedRecord, "bad polarity or label byte", index_);
        out.event = Event{std::int64_t(t), std::uint16_t(detail::get_le(rec + 8, 2)),
                          std::uint16_t(detail::get_le(rec + 10, 2)), p};
        out.label = Label(lab);
        ++read_;
        return true;
    }

    std::ifstream file_;
    StreamFormat format_;
    SensorGeometry geometry_;
    bool allow_unsorted_;
    std::int64_t index_ = 0;
    std::int64_t prev_t_ = 0;
    std::uint64_t bin_count_ = 0;
    std::uint64_t read_ = 0;
};

/// Incremental writer. Binary headers carry the event count, which is only
/// known at the end, so `finish()` patches it in place; it must be called
/// (write_stream and the CLI do).
class StreamWriter {
public:
    StreamWriter(const std::string& path, StreamFormat format, SensorGeometry geometry)
        : path_(path), format_(format), geometry_(geometry) {
        file_.open(path, std::ios::binary | std::ios::trunc);
        if (!file_) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
        if (format_ == StreamFormat::Csv) {
            file_ << kCsvHeader << '\n';
        } else {
            std::string head;
            head.append(kBinMagic.data(), 4);
            detail::put_u32(head, geometry_.width);
            detail::put_u32(head, geometry_.height);
            detail::put_u64(head, 0); // patched by finish()
            file_.write(head.data(), std::streamsize(head.size()));
        }
        if (!file_) throw Error(ErrorCode::IoFailure, "write failed on " + path_);
    }

    void write(const LabeledEvent& ev) {
        if (format_ == StreamFormat::Csv) {
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof(buf), ev.event.t);
            std::string line(buf, res.ptr);
            line += ',';
            line += std::to_string(ev.event.x);
            line += ',';
            line += std::to_string(ev.event.y);
            line += ',';
            line += char('0' + ev.event.polarity);
            line += ',';
            line += label_char(ev.label);
            line += '\n';
            file_.write(line.data(), std::streamsize(line.size()));
        } else {
            std::string rec;
            rec.reserve(14);
            detail::put_u64(rec, std::uint64_t(ev.event.t));
            detail::put_u16(rec, ev.event.x);
            detail::put_u16(rec, ev.event.y);
            rec.push_back(char(ev.event.polarity));
            rec.push_back(char(std::uint8_t(ev.label)));
            file_.write(rec.data(), std::streamsize(rec.size()));
        }
        if (!file_) throw Error(ErrorCode::IoFailure, "write failed on " + path_);
        ++count_;
    }

    void finish() {
        if (finished_) return;
        if (format_ == StreamFormat::Bin) {
            file_.seekp(12); // count sits after magic + width + height
            std::string cnt;
            detail::put_u64(cnt, count_);
            file_.write(cnt.data(), 8);
        }
        file_.flush();
        if (!file_) throw Error(ErrorCode::IoFailure, "write failed on " + path_);
        file_.close();
        finished_ = true;
    }

    std::uint64_t count() const { return count_; }

private:
    std::string path_;
    StreamFormat format_;
    SensorGeometry geometry_;
    std::ofstream file_;
    std::uint64_t count_ = 0;
    bool finished_ = false;
};

/// Reads a whole stream into memory. With `allow_unsorted` the order check
/// is skipped and the result is canonically sorted instead; default is to
/// reject out-of-order files so acquisition bugs stay visible.
inline EventStream read_stream(const std::string& path, StreamFormat format,
                               SensorGeometry csv_geometry = SensorGeometry{},
                               bool allow_unsorted = false) {
    StreamReader reader(path, format, csv_geometry, allow_unsorted);
    EventStream stream;
    stream.geometry = reader.geometry();
    if (reader.declared_count() > 0) stream.events.reserve(std::size_t(reader.declared_count()));
    LabeledEvent ev;
    while (reader.next(ev)) stream.events.push_back(ev);
    if (allow_unsorted) canonical_sort(stream.events);
    return stream;
}

inline void write_stream(const EventStream& stream, const std::string& path, StreamFormat format) {
    StreamWriter writer(path, format, stream.geometry);
    for (const auto& ev : stream.events) writer.write(ev);
    writer.finish();
}

} // namespace evf
