#include "tsad/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace tsad {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_number(std::string_view text) {
    if (text.empty()) {
        return std::nullopt;
    }
    if (text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::optional<std::uint8_t> parse_event(std::string_view text) {
    const auto lower = lowercase(text);
    if (lower == "true" || lower == "1") {
        return 1;
    }
    if (lower == "false" || lower == "0") {
        return 0;
    }
    return std::nullopt;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

std::string_view channel_name(ChannelId id) {
    switch (id) {
        case ChannelId::Tp: return "Tp";
        case ChannelId::Cl: return "Cl";
        case ChannelId::pH: return "pH";
        case ChannelId::Redox: return "Redox";
        case ChannelId::Leit: return "Leit";
        case ChannelId::Trueb: return "Trueb";
        case ChannelId::Cl_2: return "Cl_2";
        case ChannelId::Fm: return "Fm";
        case ChannelId::Fm_2: return "Fm_2";
    }
    return "?";
}

std::optional<ChannelId> channel_from_name(std::string_view name) {
    for (auto id : kAllChannels) {
        if (channel_name(id) == name) {
            return id;
        }
    }
    if (name == "Temp") {
        return ChannelId::Tp;
    }
    if (name == "Turbid") {
        return ChannelId::Trueb;
    }
    return std::nullopt;
}

std::vector<ChannelId> all_channels() { return {kAllChannels.begin(), kAllChannels.end()}; }

TimeSeriesFrame::TimeSeriesFrame(std::vector<Timestamp> timestamps, std::vector<ChannelId> channels,
                                 std::vector<std::vector<double>> values, Labels labels)
    : timestamps_(std::move(timestamps)),
      channels_(std::move(channels)),
      values_(std::move(values)),
      labels_(std::move(labels)) {
    if (values_.size() != channels_.size()) {
        throw std::invalid_argument("TimeSeriesFrame: one value column per channel required");
    }
    for (std::size_t i = 0; i < channels_.size(); ++i) {
        for (std::size_t j = i + 1; j < channels_.size(); ++j) {
            if (channels_[i] == channels_[j]) {
                throw std::invalid_argument("TimeSeriesFrame: duplicate channel " +
                                            std::string(channel_name(channels_[i])));
            }
        }
    }
    const auto n = timestamps_.size();
    if (labels_.size() != n) {
        throw std::invalid_argument("TimeSeriesFrame: label count differs from row count");
    }
    for (std::size_t c = 0; c < values_.size(); ++c) {
        if (values_[c].size() != n) {
            throw std::invalid_argument("TimeSeriesFrame: channel " +
                                        std::string(channel_name(channels_[c])) +
                                        " length differs from row count");
        }
    }
    for (std::size_t r = 1; r < n; ++r) {
        if (timestamps_[r] <= timestamps_[r - 1]) {
            throw OrderingError("timestamps not strictly increasing at row " + std::to_string(r));
        }
    }
    missing_.resize(values_.size());
    for (std::size_t c = 0; c < values_.size(); ++c) {
        missing_[c].resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            if (!std::isfinite(values_[c][r])) {
                values_[c][r] = kMissing;
                missing_[c][r] = 1;
            }
        }
    }
    for (auto& label : labels_) {
        label = label != 0 ? 1 : 0;
    }
}

std::optional<std::size_t> TimeSeriesFrame::channel_index(ChannelId id) const {
    auto it = std::find(channels_.begin(), channels_.end(), id);
    if (it == channels_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - channels_.begin());
}

std::span<const double> TimeSeriesFrame::channel(ChannelId id) const {
    auto idx = channel_index(id);
    if (!idx) {
        throw std::out_of_range("frame has no channel " + std::string(channel_name(id)));
    }
    return values_[*idx];
}

std::size_t TimeSeriesFrame::missing_count() const noexcept {
    std::size_t count = 0;
    for (const auto& mask : missing_) {
        count += static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
    }
    return count;
}

std::size_t TimeSeriesFrame::positive_count() const noexcept {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), std::uint8_t{1}));
}

TimeSeriesFrame TimeSeriesFrame::slice(std::size_t first, std::size_t last) const {
    if (first > last || last > rows()) {
        throw std::out_of_range("TimeSeriesFrame::slice: bad range");
    }
    const auto b = static_cast<std::ptrdiff_t>(first);
    const auto e = static_cast<std::ptrdiff_t>(last);
    std::vector<std::vector<double>> values;
    values.reserve(values_.size());
    for (const auto& col : values_) {
        values.emplace_back(col.begin() + b, col.begin() + e);
    }
    return TimeSeriesFrame({timestamps_.begin() + b, timestamps_.begin() + e}, channels_, std::move(values),
                           {labels_.begin() + b, labels_.begin() + e});
}

TimeSeriesFrame TimeSeriesFrame::select_rows(std::span<const std::size_t> rows) const {
    for (auto r : rows) {
        if (r >= this->rows()) {
            throw std::out_of_range("TimeSeriesFrame::select_rows: row out of range");
        }
    }
    std::vector<std::vector<double>> values;
    values.reserve(values_.size());
    for (const auto& col : values_) {
        values.push_back(select(col, rows));
    }
    return TimeSeriesFrame(select(timestamps_, rows), channels_, std::move(values), select(labels_, rows));
}

FeatureMatrix TimeSeriesFrame::to_matrix(std::span<const ChannelId> columns) const {
    std::vector<std::size_t> idx;
    if (columns.empty()) {
        for (std::size_t c = 0; c < channels_.size(); ++c) {
            idx.push_back(c);
        }
    } else {
        for (auto id : columns) {
            auto found = channel_index(id);
            if (!found) {
                throw std::out_of_range("frame has no channel " + std::string(channel_name(id)));
            }
            idx.push_back(*found);
        }
    }
    FeatureMatrix out(rows(), idx.size());
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t j = 0; j < idx.size(); ++j) {
            out(r, j) = values_[idx[j]][r];
        }
    }
    return out;
}

bool operator==(const TimeSeriesFrame& a, const TimeSeriesFrame& b) {
    if (a.timestamps_ != b.timestamps_ || a.channels_ != b.channels_ || a.labels_ != b.labels_ ||
        a.missing_ != b.missing_) {
        return false;
    }
    for (std::size_t c = 0; c < a.values_.size(); ++c) {
        for (std::size_t r = 0; r < a.rows(); ++r) {
            if (a.missing_[c][r] == 0 && a.values_[c][r] != b.values_[c][r]) {
                return false;
            }
        }
    }
    return true;
}

TimeSeriesFrame parse_csv(std::istream& in, std::span<const ChannelId> schema) {
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError("empty input: header row missing");
    }
    const auto header = split_fields(line);

    std::optional<std::size_t> time_col;
    std::optional<std::size_t> event_col;
    std::vector<std::optional<std::size_t>> channel_cols(schema.size());
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = header[i];
        if (lowercase(name) == "time") {
            time_col = i;
        } else if (name == "EVENT") {
            event_col = i;
        } else if (auto id = channel_from_name(name)) {
            for (std::size_t s = 0; s < schema.size(); ++s) {
                if (schema[s] == *id) {
                    channel_cols[s] = i;
                }
            }
        }
    }
    std::string absent;
    auto note_absent = [&absent](std::string_view name) {
        absent += absent.empty() ? "" : ", ";
        absent += name;
    };
    if (!time_col) {
        note_absent("Time");
    }
    for (std::size_t s = 0; s < schema.size(); ++s) {
        if (!channel_cols[s]) {
            note_absent(channel_name(schema[s]));
        }
    }
    if (!event_col) {
        note_absent("EVENT");
    }
    if (!absent.empty()) {
        throw SchemaError("missing required column(s): " + absent);
    }

    std::vector<Timestamp> timestamps;
    std::vector<std::vector<double>> values(schema.size());
    Labels labels;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() < header.size()) {
            throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                                 " fields, got " + std::to_string(fields.size()),
                             row);
        }
        auto ts = parse_civil_time(fields[*time_col]);
        if (!ts) {
            throw ParseError("row " + std::to_string(row) + ": malformed timestamp '" +
                                 std::string(fields[*time_col]) + "'",
                             row, *time_col + 1);
        }
        if (!timestamps.empty() && *ts <= timestamps.back()) {
            throw OrderingError("row " + std::to_string(row) + ": timestamp " + std::string(fields[*time_col]) +
                                " does not increase");
        }
        auto event = parse_event(fields[*event_col]);
        if (!event) {
            throw ParseError("row " + std::to_string(row) + ": EVENT must be True/False/1/0, got '" +
                                 std::string(fields[*event_col]) + "'",
                             row, *event_col + 1);
        }
        timestamps.push_back(*ts);
        labels.push_back(*event);
        for (std::size_t s = 0; s < schema.size(); ++s) {
            values[s].push_back(parse_number(fields[*channel_cols[s]]).value_or(kMissing));
        }
    }
    return TimeSeriesFrame(std::move(timestamps), {schema.begin(), schema.end()}, std::move(values),
                           std::move(labels));
}

TimeSeriesFrame parse_csv(const std::filesystem::path& path, std::span<const ChannelId> schema) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    return parse_csv(in, schema);
}

void write_csv(std::ostream& out, const TimeSeriesFrame& frame) {
    out << "Time";
    for (auto id : frame.channels()) {
        out << ',' << channel_name(id);
    }
    out << ",EVENT\n";
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out << format_civil_time(frame.timestamps()[r]);
        for (std::size_t c = 0; c < frame.channels().size(); ++c) {
            out << ',';
            if (!frame.is_missing(c, r)) {
                out << format_number(frame.channel_at(c)[r]);
            }
        }
        out << ',' << (frame.labels()[r] ? "True" : "False") << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const TimeSeriesFrame& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    write_csv(out, frame);
}

TimeSeriesFrame fill_missing(const TimeSeriesFrame& frame) {
    const auto n = frame.rows();
    const auto channel_count = frame.channels().size();
    std::size_t first_complete = 0;
    for (std::size_t c = 0; c < channel_count; ++c) {
        std::size_t r = 0;
        while (r < n && frame.is_missing(c, r)) {
            ++r;
        }
        if (r == n && n > 0) {
            throw UnfixableChannelError(frame.channels()[c], "channel " + std::string(channel_name(frame.channels()[c])) +
                                                                 " has no observed value");
        }
        first_complete = std::max(first_complete, r);
    }

    std::vector<std::vector<double>> values(channel_count);
    for (std::size_t c = 0; c < channel_count; ++c) {
        const auto src = frame.channel_at(c);
        auto& dst = values[c];
        dst.reserve(n - first_complete);
        double last = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            if (!frame.is_missing(c, r)) {
                last = src[r];
            }
            if (r >= first_complete) {
                dst.push_back(last);
            }
        }
    }
    const auto b = static_cast<std::ptrdiff_t>(first_complete);
    return TimeSeriesFrame({frame.timestamps().begin() + b, frame.timestamps().end()}, frame.channels(),
                           std::move(values), {frame.labels().begin() + b, frame.labels().end()});
}

std::pair<TimeSeriesFrame, TimeSeriesFrame> chronological_split(const TimeSeriesFrame& frame,
                                                                 const SplitSpec& spec) {
    const double f = spec.holdout_fraction;
    if (!(f > 0.0 && f < 1.0)) {
        throw std::invalid_argument("holdout_fraction must lie in (0, 1)");
    }
    if (frame.empty()) {
        throw std::invalid_argument("chronological_split: empty frame");
    }
    const auto n = frame.rows();
    // Guard against 0.8 * 10 landing a hair above 8.
    auto head = static_cast<std::size_t>(std::ceil((1.0 - f) * static_cast<double>(n) - 1e-9));
    head = std::clamp<std::size_t>(head, 1, n);
    return {frame.slice(0, head), frame.slice(head, n)};
}

}  // namespace tsad
