#include "tsad/stream.hpp"

namespace tsad::stream {

StreamEngine::StreamEngine(StreamTaskSpec spec, bool strict_schema)
    : spec_(std::move(spec)), strict_schema_(strict_schema) {
    if (spec_.every <= Duration::zero() || spec_.period < spec_.every) {
        throw TaskValidationError("window requires period >= every > 0");
    }
}

IngestAck StreamEngine::ingest(const DataPoint& point) {
    if (strict_schema_ && !point.complete()) {
        std::string missing;
        for (const auto id : kAllChannels) {
            if (point.has(id)) continue;
            if (!missing.empty()) missing += ", ";
            missing += channel_name(id);
        }
        throw SchemaError("point at " + format_rfc3339(point.timestamp) + " lacks channels: " + missing);
    }
    std::lock_guard lock(mutex_);
    IngestAck ack;
    ack.buffered = true;
    ack.timestamp = point.timestamp;
    auto [it, inserted] = buffer_.insert_or_assign(point.timestamp, point);
    if (!inserted) {
        ack.overwrote = true;
        ++overwrites_;
    }
    return ack;
}

IngestAck StreamEngine::ingest_line(std::string_view line) {
    const auto rec = parse_line(line);
    if (rec.measurement != spec_.measurement) {
        IngestAck ack;
        ack.timestamp = rec.point.timestamp;
        return ack;
    }
    return ingest(rec.point);
}

std::optional<WindowBatch> StreamEngine::emit_window(Timestamp now) {
    std::lock_guard lock(mutex_);
    if (last_emit_ && now - *last_emit_ < spec_.every) return std::nullopt;

    WindowBatch batch;
    batch.window_end = now;
    const Timestamp start = now - spec_.period;
    for (auto it = buffer_.upper_bound(start); it != buffer_.end() && it->first <= now; ++it) {
        batch.points.push_back(it->second);
    }
    // Later windows start later, so anything at or before this start is done.
    buffer_.erase(buffer_.begin(), buffer_.upper_bound(start));

    last_emit_ = now;
    latest_ = batch;
    return batch;
}

std::optional<WindowBatch> StreamEngine::latest_batch() const {
    std::lock_guard lock(mutex_);
    return latest_;
}

std::optional<Timestamp> StreamEngine::last_emit() const {
    std::lock_guard lock(mutex_);
    return last_emit_;
}

std::size_t StreamEngine::overwrite_count() const {
    std::lock_guard lock(mutex_);
    return overwrites_;
}

std::size_t StreamEngine::buffered_count() const {
    std::lock_guard lock(mutex_);
    return buffer_.size();
}

std::optional<Timestamp> StreamEngine::newest_timestamp() const {
    std::lock_guard lock(mutex_);
    if (buffer_.empty()) return std::nullopt;
    return buffer_.rbegin()->first;
}

namespace {

// Smallest multiple of `every` (counted from the epoch) that is >= t.
Timestamp ceil_boundary(Timestamp t, Duration every) {
    const auto ns = t.time_since_epoch().count();
    const auto step = every.count();
    auto q = ns / step;
    if (q * step < ns) ++q;
    return Timestamp{Duration{q * step}};
}

}  // namespace

std::vector<WindowBatch> ReplayClock::advance_before(Timestamp t) {
    std::vector<WindowBatch> out;
    const auto every = engine_.spec().every;
    if (!next_boundary_) return out;
    while (*next_boundary_ < t) {
        if (auto b = engine_.emit_window(*next_boundary_)) out.push_back(std::move(*b));
        *next_boundary_ += every;
    }
    return out;
}

std::vector<WindowBatch> ReplayClock::ingest(const DataPoint& point) {
    auto out = advance_before(point.timestamp);
    if (!next_boundary_) next_boundary_ = ceil_boundary(point.timestamp, engine_.spec().every);
    engine_.ingest(point);
    return out;
}

std::vector<WindowBatch> ReplayClock::flush() {
    std::vector<WindowBatch> out;
    const auto newest = engine_.newest_timestamp();
    if (!newest || !next_boundary_) return out;
    const auto last = engine_.last_emit();
    if (last && *newest <= *last) return out;
    out = advance_before(*newest);
    if (auto b = engine_.emit_window(*next_boundary_)) out.push_back(std::move(*b));
    *next_boundary_ += engine_.spec().every;
    return out;
}

ReplayReport replay(const std::vector<DataPoint>& points, const StreamTaskSpec& spec,
                    std::shared_ptr<const TrainedClassifier> model, std::string model_id) {
    StreamEngine engine(spec);
    ReplayClock clock(engine);
    std::optional<StreamScorer> scorer;
    if (model) scorer.emplace(std::move(model), std::move(model_id));

    ReplayReport report;
    const auto take = [&](std::vector<WindowBatch> batches) {
        for (auto& b : batches) {
            report.window_ends.push_back(b.window_end);
            report.batch_sizes.push_back(b.points.size());
            if (scorer) {
                auto alerts = scorer->consume(b);
                report.alerts.insert(report.alerts.end(), alerts.begin(), alerts.end());
            }
        }
    };
    for (const auto& p : points) take(clock.ingest(p));
    take(clock.flush());
    return report;
}

}  // namespace tsad::stream
