#include "tsad/stream.hpp"

#include <cctype>
#include <charconv>
#include <limits>

namespace tsad::stream {
namespace {

struct Unit {
    std::string_view suffix;
    std::int64_t nanos;
};

constexpr std::int64_t kSecond = 1'000'000'000;
constexpr Unit kUnits[] = {
    {"ns", 1},           {"us", 1'000},         {"u", 1'000},           {"ms", 1'000'000},
    {"s", kSecond},      {"m", 60 * kSecond},   {"h", 3600 * kSecond},  {"d", 86400 * kSecond},
    {"w", 7 * 86400 * kSecond},
};

class TaskParser {
public:
    explicit TaskParser(std::string_view src) : src_(src) {}

    StreamTaskSpec parse() {
        StreamTaskSpec spec;
        skip_space();
        const auto head = identifier_or_fail("stream");
        if (head != "stream") fail("expected 'stream' at start of task, found '" + head + "'");

        expect_node("from");
        spec.measurement = string_argument_list();

        expect_node("window");
        expect('(');
        spec.period = duration_literal();
        expect(',');
        spec.every = duration_literal();
        expect(')');

        expect_node("httpOut");
        spec.out_name = string_argument_list();

        skip_space();
        if (pos_ < src_.size()) {
            if (src_[pos_] == '|') {
                ++pos_;
                skip_space();
                const auto extra = identifier_or_fail("node");
                fail("unexpected node '" + extra + "' after httpOut");
            }
            fail(std::string("unexpected trailing input '") + src_[pos_] + "'");
        }
        return spec;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < pos_ && i < src_.size(); ++i) {
            if (src_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw TaskSyntaxError("task line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg,
                              line, col);
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string identifier_or_fail(const std::string& wanted) {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        if (start == pos_) {
            pos_ = start;
            if (start >= src_.size()) fail("expected '" + wanted + "' but reached end of task");
            fail("expected '" + wanted + "' but found '" + std::string(1, src_[start]) + "'");
        }
        return std::string(src_.substr(start, pos_ - start));
    }

    void expect(char c) {
        skip_space();
        if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' but reached end of task");
        if (src_[pos_] != c) fail(std::string("expected '") + c + "' but found '" + src_[pos_] + "'");
        ++pos_;
        skip_space();
    }

    void expect_node(const std::string& name) {
        skip_space();
        if (pos_ >= src_.size()) fail("missing node '" + name + "'");
        expect('|');
        const std::size_t at = pos_;
        const auto found = identifier_or_fail(name);
        if (found == name) return;
        pos_ = at;
        static const std::string_view known[] = {"from", "window", "httpOut"};
        for (const auto k : known) {
            if (found == k) fail("missing node '" + name + "': found '" + found + "' instead");
        }
        fail("unknown node '" + found + "' (expected '" + name + "')");
    }

    std::string string_argument_list() {
        expect('(');
        if (pos_ >= src_.size() || (src_[pos_] != '"' && src_[pos_] != '\'')) fail("expected a quoted name");
        const char quote = src_[pos_++];
        const std::size_t start = pos_;
        while (pos_ < src_.size() && src_[pos_] != quote && src_[pos_] != '\n') ++pos_;
        if (pos_ >= src_.size() || src_[pos_] != quote) fail("unterminated string");
        std::string value(src_.substr(start, pos_ - start));
        ++pos_;
        if (value.empty()) fail("name must not be empty");
        expect(')');
        return value;
    }

    Duration duration_literal() {
        skip_space();
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])))) ++pos_;
        const auto text = src_.substr(start, pos_ - start);
        if (text.empty()) {
            pos_ = start;
            fail("expected a duration such as 5d or 2h");
        }
        const auto d = parse_duration(text);
        if (!d) {
            pos_ = start;
            fail("invalid duration '" + std::string(text) + "'");
        }
        skip_space();
        return *d;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace

std::optional<Duration> parse_duration(std::string_view text) {
    std::size_t digits = 0;
    while (digits < text.size() && std::isdigit(static_cast<unsigned char>(text[digits]))) ++digits;
    if (digits == 0) return std::nullopt;
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + digits, value);
    if (ec != std::errc{} || ptr != text.data() + digits) return std::nullopt;
    const auto suffix = text.substr(digits);
    for (const auto& u : kUnits) {
        if (u.suffix != suffix) continue;
        if (value > std::numeric_limits<std::int64_t>::max() / u.nanos) return std::nullopt;
        return Duration{value * u.nanos};
    }
    return std::nullopt;
}

std::string format_duration(Duration d) {
    const std::int64_t ns = d.count();
    for (auto it = std::rbegin(kUnits); it != std::rend(kUnits); ++it) {
        if (it->suffix == "u") continue;
        if (ns != 0 && ns % it->nanos == 0) return std::to_string(ns / it->nanos) + std::string(it->suffix);
    }
    return std::to_string(ns) + "ns";
}

StreamTaskSpec define_task(std::string_view script) {
    auto spec = TaskParser(script).parse();
    if (spec.every <= Duration::zero()) throw TaskValidationError("window every must be positive");
    if (spec.period < spec.every) {
        throw TaskValidationError("window period (" + format_duration(spec.period) + ") is shorter than every (" +
                                  format_duration(spec.every) + ")");
    }
    return spec;
}

}  // namespace tsad::stream
