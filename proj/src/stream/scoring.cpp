#include "tsad/stream.hpp"

#include <nlohmann/json.hpp>

namespace tsad::stream {

std::vector<ChannelId> model_channels(const TrainedClassifier& model) {
    const auto& names = model.feature_names();
    if (names.empty()) {
        if (model.width() != kChannelCount) {
            throw ScoringError("model has " + std::to_string(model.width()) +
                               " unnamed features; cannot map them to channels");
        }
        return {kAllChannels.begin(), kAllChannels.end()};
    }
    std::vector<ChannelId> ids;
    ids.reserve(names.size());
    for (const auto& n : names) {
        const auto id = channel_from_name(n);
        if (!id) throw ScoringError("model feature '" + n + "' is not a channel");
        ids.push_back(*id);
    }
    return ids;
}

std::vector<AnomalyAlert> score_stream(const TrainedClassifier& model, const WindowBatch& batch,
                                       const DataPoint& prev_point, std::string_view model_id) {
    const auto ids = model_channels(model);
    std::vector<AnomalyAlert> alerts;
    std::vector<double> row(ids.size());
    const DataPoint* prev = &prev_point;
    for (const auto& p : batch.points) {
        for (std::size_t j = 0; j < ids.size(); ++j) {
            if (!p.has(ids[j]) || !prev->has(ids[j])) {
                const auto& at = p.has(ids[j]) ? *prev : p;
                throw ScoringError("channel " + std::string(channel_name(ids[j])) + " missing at " +
                                   format_rfc3339(at.timestamp));
            }
            row[j] = p.get(ids[j]) - prev->get(ids[j]);
        }
        if (model.predict_row(row)) {
            AnomalyAlert a;
            a.timestamp = p.timestamp;
            a.snapshot = p;
            a.model_id = std::string(model_id);
            alerts.push_back(std::move(a));
        }
        prev = &p;
    }
    return alerts;
}

StreamScorer::StreamScorer(std::shared_ptr<const TrainedClassifier> model, std::string model_id)
    : model_(std::move(model)), model_id_(std::move(model_id)) {
    if (!model_) throw std::invalid_argument("StreamScorer needs a model");
    (void)model_channels(*model_);
}

std::vector<AnomalyAlert> StreamScorer::consume(const WindowBatch& batch) {
    auto it = batch.points.begin();
    if (last_) {
        while (it != batch.points.end() && it->timestamp <= last_->timestamp) ++it;
    } else if (it != batch.points.end()) {
        // The very first point has no predecessor; it only anchors the differences.
        last_ = *it++;
    }
    if (it == batch.points.end()) return {};

    WindowBatch fresh;
    fresh.window_end = batch.window_end;
    fresh.points.assign(it, batch.points.end());
    auto alerts = score_stream(*model_, fresh, *last_, model_id_);
    scored_ += fresh.points.size();
    last_ = fresh.points.back();
    return alerts;
}

std::string alert_to_json(const AnomalyAlert& alert) {
    nlohmann::json values = nlohmann::json::object();
    for (const auto id : kAllChannels) {
        if (alert.snapshot.has(id)) {
            values[std::string(channel_name(id))] = alert.snapshot.get(id);
        } else {
            values[std::string(channel_name(id))] = nullptr;
        }
    }
    nlohmann::json doc = {
        {"time", format_rfc3339(alert.timestamp)},
        {"model", alert.model_id},
        {"predicted", alert.predicted},
        {"values", std::move(values)},
    };
    return doc.dump();
}

}  // namespace tsad::stream
