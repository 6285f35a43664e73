#include "tsad/stream.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace tsad::stream {
namespace {

constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void line_error(const std::string& msg, std::size_t column) {
    throw ParseError("line protocol: " + msg, 0, column);
}

std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

DataPoint::DataPoint() { values.fill(kAbsent); }

bool DataPoint::has(ChannelId id) const { return !std::isnan(get(id)); }

bool DataPoint::complete() const {
    for (const double v : values) {
        if (std::isnan(v)) return false;
    }
    return true;
}

bool operator==(const DataPoint& a, const DataPoint& b) {
    if (a.timestamp != b.timestamp) return false;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const bool na = std::isnan(a.values[c]);
        const bool nb = std::isnan(b.values[c]);
        if (na != nb) return false;
        if (!na && a.values[c] != b.values[c]) return false;
    }
    return true;
}

LineRecord parse_line(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n' || line.back() == ' ')) line.remove_suffix(1);
    std::size_t lead = 0;
    while (lead < line.size() && line[lead] == ' ') ++lead;
    const std::string_view body = line.substr(lead);

    const auto first_space = body.find(' ');
    if (body.empty()) line_error("empty line", 1);
    if (first_space == std::string_view::npos) line_error("expected '<measurement> <fields> <timestamp>'", 1);
    const auto last_space = body.rfind(' ');
    if (last_space == first_space) line_error("missing timestamp", lead + body.size() + 1);

    LineRecord rec;
    rec.measurement = std::string(body.substr(0, first_space));
    if (rec.measurement.find_first_of(",=") != std::string::npos) {
        line_error("tags are not supported in measurement '" + rec.measurement + "'", lead + 1);
    }

    std::size_t fstart = first_space + 1;
    while (fstart < last_space && body[fstart] == ' ') ++fstart;
    std::size_t fend = last_space;
    while (fend > fstart && body[fend - 1] == ' ') --fend;
    const std::string_view fields = body.substr(fstart, fend - fstart);
    if (fields.empty()) line_error("empty field set", lead + fstart + 1);
    if (fields.find(' ') != std::string_view::npos) line_error("unexpected space inside field set", lead + fstart + 1);

    std::size_t pos = 0;
    while (pos <= fields.size()) {
        auto comma = fields.find(',', pos);
        if (comma == std::string_view::npos) comma = fields.size();
        const auto item = fields.substr(pos, comma - pos);
        const std::size_t col = lead + fstart + pos + 1;
        const auto eq = item.find('=');
        if (item.empty() || eq == std::string_view::npos || eq == 0) line_error("expected <field>=<value>", col);
        const auto name = item.substr(0, eq);
        auto value_text = item.substr(eq + 1);
        if (!value_text.empty() && value_text.back() == 'i') value_text.remove_suffix(1);
        const auto channel = channel_from_name(name);
        if (!channel) line_error("unknown field '" + std::string(name) + "'", col);
        if (rec.point.has(*channel)) line_error("field '" + std::string(name) + "' given twice", col);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), v);
        if (value_text.empty() || ec != std::errc{} || ptr != value_text.data() + value_text.size() ||
            !std::isfinite(v)) {
            line_error("invalid value for field '" + std::string(name) + "'", col + eq + 1);
        }
        rec.point.set(*channel, v);
        pos = comma + 1;
    }

    const auto ts_text = body.substr(last_space + 1);
    std::int64_t ns = 0;
    const auto [ptr, ec] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ns);
    if (ts_text.empty() || ec != std::errc{} || ptr != ts_text.data() + ts_text.size()) {
        line_error("invalid timestamp '" + std::string(ts_text) + "'", lead + last_space + 2);
    }
    rec.point.timestamp = from_unix_nanos(ns);
    return rec;
}

std::string format_line(std::string_view measurement, const DataPoint& point) {
    std::string out(measurement);
    out += ' ';
    bool first = true;
    for (const auto id : kAllChannels) {
        if (!point.has(id)) continue;
        if (!first) out += ',';
        first = false;
        out += channel_name(id);
        out += '=';
        out += shortest(point.get(id));
    }
    out += ' ';
    out += std::to_string(to_unix_nanos(point.timestamp));
    return out;
}

std::vector<DataPoint> frame_points(const TimeSeriesFrame& frame) {
    std::vector<DataPoint> points(frame.rows());
    for (std::size_t r = 0; r < frame.rows(); ++r) points[r].timestamp = frame.timestamps()[r];
    for (std::size_t c = 0; c < frame.channels().size(); ++c) {
        const auto id = frame.channels()[c];
        const auto col = frame.channel_at(c);
        for (std::size_t r = 0; r < frame.rows(); ++r) points[r].set(id, col[r]);
    }
    return points;
}

namespace {

nlohmann::json columns_json() {
    auto cols = nlohmann::json::array({"time"});
    for (const auto id : kAllChannels) cols.push_back(std::string(channel_name(id)));
    return cols;
}

std::string series_body(std::string_view measurement, nlohmann::json values) {
    nlohmann::json series = {
        {"name", std::string(measurement)},
        {"columns", columns_json()},
        {"values", std::move(values)},
    };
    nlohmann::json doc = {{"series", nlohmann::json::array({std::move(series)})}};
    return doc.dump();
}

}  // namespace

std::string serve_httpout(std::string_view measurement, const WindowBatch& batch) {
    auto values = nlohmann::json::array();
    for (const auto& p : batch.points) {
        auto row = nlohmann::json::array({format_rfc3339(p.timestamp)});
        for (const auto id : kAllChannels) {
            if (p.has(id)) {
                row.push_back(p.get(id));
            } else {
                row.push_back(nullptr);
            }
        }
        values.push_back(std::move(row));
    }
    return series_body(measurement, std::move(values));
}

std::string empty_httpout(std::string_view measurement) { return series_body(measurement, nlohmann::json::array()); }

HttpOutPayload parse_httpout(std::string_view body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("httpOut body is not JSON: ") + e.what());
    }
    const auto bad = [](const std::string& msg) { return InputError("httpOut body: " + msg); };
    if (!doc.is_object() || !doc.contains("series") || !doc["series"].is_array() || doc["series"].size() != 1) {
        throw bad("expected a single entry under \"series\"");
    }
    const auto& s = doc["series"][0];
    if (!s.contains("name") || !s["name"].is_string()) throw bad("series has no name");
    if (!s.contains("columns") || !s["columns"].is_array()) throw bad("series has no columns");
    if (!s.contains("values") || !s["values"].is_array()) throw bad("series has no values");

    const auto& cols = s["columns"];
    if (cols.empty() || cols[0] != "time") throw bad("first column must be time");
    std::vector<ChannelId> ids;
    for (std::size_t i = 1; i < cols.size(); ++i) {
        const auto id = cols[i].is_string() ? channel_from_name(cols[i].get<std::string>()) : std::nullopt;
        if (!id) throw bad("unknown column " + cols[i].dump());
        ids.push_back(*id);
    }

    HttpOutPayload out;
    out.measurement = s["name"].get<std::string>();
    for (const auto& row : s["values"]) {
        if (!row.is_array() || row.size() != cols.size()) throw bad("row width differs from columns");
        DataPoint p;
        const auto t = row[0].is_string() ? parse_rfc3339(row[0].get<std::string>()) : std::nullopt;
        if (!t) throw bad("invalid time " + row[0].dump());
        p.timestamp = *t;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto& cell = row[i + 1];
            if (cell.is_null()) continue;
            if (!cell.is_number()) throw bad("non-numeric value " + cell.dump());
            p.set(ids[i], cell.get<double>());
        }
        out.points.push_back(p);
    }
    return out;
}

}  // namespace tsad::stream
