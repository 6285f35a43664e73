#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tsad/cost_models.hpp"
#include "tsad/dataset.hpp"
#include "tsad/error.hpp"
#include "tsad/time.hpp"

namespace tsad::stream {

// ---------------------------------------------------------------------------
// Task definition: `stream |from("water") |window(5d, 2h) |httpOut("batch")`

struct StreamTaskSpec {
    std::string measurement = "water";
    Duration period = std::chrono::hours(24 * 5);
    Duration every = std::chrono::hours(2);
    std::string out_name = "batch";

    /// HTTP route the window batches are served on.
    [[nodiscard]] std::string out_path() const { return "/" + out_name; }
};

class TaskSyntaxError : public InputError {
public:
    TaskSyntaxError(const std::string& what, std::size_t line, std::size_t column)
        : InputError(what), line_(line), column_(column) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class TaskValidationError : public InputError {
public:
    using InputError::InputError;
};

/// Parses the chain `stream |from(<name>) |window(<period>, <every>) |httpOut(<name>)`.
/// Durations are integer literals with a unit (ns, us, ms, s, m, h, d, w).
[[nodiscard]] StreamTaskSpec define_task(std::string_view script);

[[nodiscard]] std::optional<Duration> parse_duration(std::string_view text);
[[nodiscard]] std::string format_duration(Duration d);

// ---------------------------------------------------------------------------
// Points and line protocol

/// One sample. Absent channels hold NaN.
struct DataPoint {
    Timestamp timestamp{};
    std::array<double, kChannelCount> values{};

    DataPoint();
    [[nodiscard]] bool has(ChannelId id) const;
    [[nodiscard]] double get(ChannelId id) const { return values[static_cast<std::size_t>(id)]; }
    void set(ChannelId id, double v) { values[static_cast<std::size_t>(id)] = v; }
    [[nodiscard]] bool complete() const;

    friend bool operator==(const DataPoint& a, const DataPoint& b);
};

struct LineRecord {
    std::string measurement;
    DataPoint point;
};

/// `<measurement> <field>=<value>[,<field>=<value>...] <unix-ns>`. Throws ParseError.
[[nodiscard]] LineRecord parse_line(std::string_view line);
/// Present channels in canonical order, shortest round-trip decimals.
[[nodiscard]] std::string format_line(std::string_view measurement, const DataPoint& point);

/// Rows of a frame as points (timestamps and channel values, no labels).
[[nodiscard]] std::vector<DataPoint> frame_points(const TimeSeriesFrame& frame);

// ---------------------------------------------------------------------------
// Windowing

struct WindowBatch {
    Timestamp window_end{};
    std::vector<DataPoint> points;  ///< ascending, all in (window_end - period, window_end]
};

struct IngestAck {
    bool buffered = false;     ///< false when the point's measurement is not the task's
    bool overwrote = false;    ///< an earlier point with the same timestamp was replaced
    Timestamp timestamp{};
};

/**
 * Buffer and window state of one stream task. A single writer may ingest while
 * any number of readers fetch the latest batch; every method locks internally.
 */
class StreamEngine {
public:
    explicit StreamEngine(StreamTaskSpec spec, bool strict_schema = false);

    [[nodiscard]] const StreamTaskSpec& spec() const noexcept { return spec_; }

    /// Buffers the point in timestamp order. Duplicate timestamps: last write wins.
    IngestAck ingest(const DataPoint& point);
    /// Parses one line-protocol record and ingests it. Other measurements are acknowledged but not buffered.
    IngestAck ingest_line(std::string_view line);

    /// Emits iff no batch was emitted yet or now - last emission >= every.
    /// The batch holds every buffered point in (now - period, now].
    std::optional<WindowBatch> emit_window(Timestamp now);

    [[nodiscard]] std::optional<WindowBatch> latest_batch() const;
    [[nodiscard]] std::optional<Timestamp> last_emit() const;
    [[nodiscard]] std::size_t overwrite_count() const;
    [[nodiscard]] std::size_t buffered_count() const;
    [[nodiscard]] std::optional<Timestamp> newest_timestamp() const;

private:
    StreamTaskSpec spec_;
    bool strict_schema_;
    mutable std::mutex mutex_;
    std::map<Timestamp, DataPoint> buffer_;
    std::optional<Timestamp> last_emit_;
    std::optional<WindowBatch> latest_;
    std::size_t overwrites_ = 0;
};

/**
 * Virtual clock driven by ingested timestamps. Emission instants are the
 * multiples of `every` since the epoch; the window ending at b is emitted as
 * soon as a point later than b arrives, or on flush.
 */
class ReplayClock {
public:
    explicit ReplayClock(StreamEngine& engine) : engine_(engine) {}

    /// Emits every pending boundary strictly before `t`, then ingests the point.
    std::vector<WindowBatch> ingest(const DataPoint& point);
    /// Emits the boundary covering the newest buffered point, if not yet emitted.
    std::vector<WindowBatch> flush();

private:
    std::vector<WindowBatch> advance_before(Timestamp t);

    StreamEngine& engine_;
    std::optional<Timestamp> next_boundary_;
};

// ---------------------------------------------------------------------------
// httpOut JSON

/// `{"series":[{"name":..,"columns":["time","Tp",...,"Fm_2"],"values":[[...],...]}]}`
[[nodiscard]] std::string serve_httpout(std::string_view measurement, const WindowBatch& batch);
/// Body served before any batch exists.
[[nodiscard]] std::string empty_httpout(std::string_view measurement);

struct HttpOutPayload {
    std::string measurement;
    std::vector<DataPoint> points;
};

[[nodiscard]] HttpOutPayload parse_httpout(std::string_view body);

// ---------------------------------------------------------------------------
// Scoring

struct AnomalyAlert {
    Timestamp timestamp{};
    DataPoint snapshot;
    bool predicted = true;
    std::string model_id;
};

class ScoringError : public InputError {
public:
    using InputError::InputError;
};

/// Channels the model consumes, from its feature names (all nine when unnamed).
[[nodiscard]] std::vector<ChannelId> model_channels(const TrainedClassifier& model);

/// Differences each point against its predecessor (prev_point for the first),
/// predicts, and returns an alert per positive. Pure.
[[nodiscard]] std::vector<AnomalyAlert> score_stream(const TrainedClassifier& model, const WindowBatch& batch,
                                                     const DataPoint& prev_point, std::string_view model_id = {});

/// Scores each point exactly once across overlapping windows.
class StreamScorer {
public:
    StreamScorer(std::shared_ptr<const TrainedClassifier> model, std::string model_id);

    std::vector<AnomalyAlert> consume(const WindowBatch& batch);
    [[nodiscard]] std::size_t scored_count() const noexcept { return scored_; }

private:
    std::shared_ptr<const TrainedClassifier> model_;
    std::string model_id_;
    std::optional<DataPoint> last_;
    std::size_t scored_ = 0;
};

[[nodiscard]] std::string alert_to_json(const AnomalyAlert& alert);

// ---------------------------------------------------------------------------
// Replay and HTTP service

struct ReplayReport {
    std::vector<Timestamp> window_ends;
    std::vector<std::size_t> batch_sizes;
    std::vector<AnomalyAlert> alerts;
};

/// Pushes points through engine + virtual clock (+ scorer when a model is given).
[[nodiscard]] ReplayReport replay(const std::vector<DataPoint>& points, const StreamTaskSpec& spec,
                                  std::shared_ptr<const TrainedClassifier> model = nullptr,
                                  std::string model_id = "model");

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 0;  ///< 0 = any free port
    std::optional<std::filesystem::path> alerts_path;
    bool strict_schema = false;
    /// Drive emissions from wall time instead of ingested timestamps.
    bool wall_clock = false;
    std::chrono::milliseconds wall_tick{1000};
};

/**
 * HTTP front end: POST /write?db=<name> (line protocol), GET <out_path> (latest
 * window), GET /alerts (JSON lines). Scoring runs on its own thread, fed by a
 * queue of emitted batches, so ingestion never waits on the model.
 */
class StreamServer {
public:
    StreamServer(StreamTaskSpec spec, std::shared_ptr<const TrainedClassifier> model, ServerOptions options);
    ~StreamServer();
    StreamServer(const StreamServer&) = delete;
    StreamServer& operator=(const StreamServer&) = delete;

    /// Binds and serves in a background thread; returns the bound port.
    int start();
    void stop();
    /// Blocks until every queued batch has been scored.
    void drain();

    [[nodiscard]] StreamEngine& engine() noexcept { return engine_; }
    [[nodiscard]] std::vector<AnomalyAlert> alerts() const;

private:
    struct Impl;
    void enqueue(std::vector<WindowBatch> batches);
    void scorer_loop();

    StreamEngine engine_;
    ReplayClock clock_;
    std::mutex clock_mutex_;
    std::shared_ptr<const TrainedClassifier> model_;
    ServerOptions options_;
    std::unique_ptr<Impl> impl_;

    mutable std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::condition_variable idle_cv_;
    std::deque<WindowBatch> queue_;
    bool busy_ = false;
    bool stopping_ = false;
    std::vector<AnomalyAlert> alerts_;

    std::thread http_thread_;
    std::thread scorer_thread_;
    std::thread tick_thread_;
    std::atomic<bool> running_{false};
};

}  // namespace tsad::stream
