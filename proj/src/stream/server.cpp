#include "tsad/stream.hpp"

#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace tsad::stream {

struct StreamServer::Impl {
    httplib::Server http;
    std::optional<StreamScorer> scorer;
    std::ofstream alert_log;
};

StreamServer::StreamServer(StreamTaskSpec spec, std::shared_ptr<const TrainedClassifier> model,
                           ServerOptions options)
    : engine_(std::move(spec), options.strict_schema),
      clock_(engine_),
      model_(std::move(model)),
      options_(std::move(options)),
      impl_(std::make_unique<Impl>()) {
    if (model_) impl_->scorer.emplace(model_, "model");
    if (options_.alerts_path) {
        impl_->alert_log.open(*options_.alerts_path, std::ios::app);
        if (!impl_->alert_log) throw InputError("cannot open alert log " + options_.alerts_path->string());
    }

    auto& http = impl_->http;
    http.Post("/write", [this](const httplib::Request& req, httplib::Response& res) {
        std::size_t line_no = 0;
        std::size_t start = 0;
        const std::string& body = req.body;
        try {
            while (start < body.size()) {
                auto end = body.find('\n', start);
                if (end == std::string::npos) end = body.size();
                ++line_no;
                const std::string_view line(body.data() + start, end - start);
                start = end + 1;
                if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
                const auto rec = parse_line(line);
                if (rec.measurement != engine_.spec().measurement) continue;
                if (options_.wall_clock) {
                    engine_.ingest(rec.point);
                } else {
                    std::lock_guard lock(clock_mutex_);
                    enqueue(clock_.ingest(rec.point));
                }
            }
        } catch (const InputError& e) {
            nlohmann::json err = {{"error", e.what()}, {"line", line_no}};
            res.status = 400;
            res.set_content(err.dump(), "application/json");
            return;
        }
        res.status = 204;
    });

    http.Post("/flush", [this](const httplib::Request&, httplib::Response& res) {
        if (!options_.wall_clock) {
            std::lock_guard lock(clock_mutex_);
            enqueue(clock_.flush());
        }
        res.status = 204;
    });

    http.Get(engine_.spec().out_path(), [this](const httplib::Request&, httplib::Response& res) {
        const auto batch = engine_.latest_batch();
        if (!batch) {
            res.status = 404;
            res.set_content(empty_httpout(engine_.spec().measurement), "application/json");
            return;
        }
        res.set_content(serve_httpout(engine_.spec().measurement, *batch), "application/json");
    });

    http.Get("/alerts", [this](const httplib::Request&, httplib::Response& res) {
        std::string body;
        for (const auto& a : alerts()) {
            body += alert_to_json(a);
            body += '\n';
        }
        res.set_content(body, "application/x-ndjson");
    });
}

StreamServer::~StreamServer() { stop(); }

int StreamServer::start() {
    if (running_.exchange(true)) throw std::logic_error("server already started");
    auto& http = impl_->http;
    int port = options_.port;
    if (port == 0) {
        port = http.bind_to_any_port(options_.host);
    } else if (!http.bind_to_port(options_.host, port)) {
        port = -1;
    }
    if (port < 0) {
        running_ = false;
        throw InputError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = false;
    }
    scorer_thread_ = std::thread([this] { scorer_loop(); });
    http_thread_ = std::thread([this] { impl_->http.listen_after_bind(); });
    if (options_.wall_clock) {
        tick_thread_ = std::thread([this] {
            while (running_) {
                const auto now = std::chrono::time_point_cast<Duration>(std::chrono::system_clock::now());
                if (auto b = engine_.emit_window(Timestamp{now.time_since_epoch()})) enqueue({std::move(*b)});
                std::unique_lock lock(queue_mutex_);
                queue_cv_.wait_for(lock, options_.wall_tick, [this] { return stopping_; });
            }
        });
    }
    impl_->http.wait_until_ready();
    return port;
}

void StreamServer::stop() {
    if (!running_.exchange(false)) return;
    impl_->http.stop();
    if (http_thread_.joinable()) http_thread_.join();
    drain();
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    if (tick_thread_.joinable()) tick_thread_.join();
    if (scorer_thread_.joinable()) scorer_thread_.join();
}

void StreamServer::enqueue(std::vector<WindowBatch> batches) {
    if (batches.empty()) return;
    {
        std::lock_guard lock(queue_mutex_);
        for (auto& b : batches) queue_.push_back(std::move(b));
    }
    queue_cv_.notify_all();
}

void StreamServer::drain() {
    std::unique_lock lock(queue_mutex_);
    idle_cv_.wait(lock, [this] { return (queue_.empty() && !busy_) || !scorer_thread_.joinable(); });
}

std::vector<AnomalyAlert> StreamServer::alerts() const {
    std::lock_guard lock(queue_mutex_);
    return alerts_;
}

void StreamServer::scorer_loop() {
    while (true) {
        WindowBatch batch;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) return;
            batch = std::move(queue_.front());
            queue_.pop_front();
            busy_ = true;
        }
        std::vector<AnomalyAlert> fresh;
        if (impl_->scorer) {
            try {
                fresh = impl_->scorer->consume(batch);
            } catch (const ScoringError&) {
                // A gap in one window must not stop the service; the batch is skipped.
            }
        }
        {
            std::lock_guard lock(queue_mutex_);
            for (const auto& a : fresh) {
                if (impl_->alert_log.is_open()) impl_->alert_log << alert_to_json(a) << '\n';
                alerts_.push_back(a);
            }
            if (impl_->alert_log.is_open()) impl_->alert_log.flush();
            busy_ = false;
        }
        idle_cv_.notify_all();
    }
}

}  // namespace tsad::stream
