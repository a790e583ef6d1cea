#include "switchboard/memory.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "switchboard/errors.hpp"

namespace switchboard {

using nlohmann::json;

ConversationMemory::ConversationMemory(std::string session_id, std::size_t cap)
    : session_id_(std::move(session_id)), cap_(cap) {
    if (cap_ == 0) throw ValidationError("memory cap must be >= 1");
}

void ConversationMemory::append(Turn turn) {
    if (turn.user_text.empty() || turn.assistant_text.empty()) {
        throw ValidationError("turn texts must be non-empty");
    }
    if (!turns_.empty() && turn.timestamp < turns_.back().timestamp) {
        throw ValidationError("turn timestamp precedes the latest turn");
    }
    turns_.push_back(std::move(turn));
    while (turns_.size() > cap_) turns_.pop_front();
}

std::vector<ChatMessage> ConversationMemory::render() const {
    std::vector<ChatMessage> out;
    out.reserve(turns_.size() * 2);
    for (const auto& t : turns_) {
        out.push_back({Role::User, t.user_text});
        out.push_back({Role::Assistant, t.assistant_text});
    }
    return out;
}

SessionStore::SessionStore(std::size_t cap, std::optional<std::filesystem::path> persist_path)
    : cap_(cap), persist_path_(std::move(persist_path)) {
    if (cap_ == 0) throw ValidationError("memory cap must be >= 1");
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot_for(const std::string& session_id) {
    std::lock_guard lk(map_mu_);
    auto& slot = sessions_[session_id];
    if (!slot) slot = std::make_shared<Slot>(session_id, cap_);
    return slot;
}

void SessionStore::commit(ConversationMemory& memory, Turn turn) {
    if (persist_path_) {
        json rec{{"session_id", memory.session_id()},
                 {"user_text", turn.user_text},
                 {"assistant_text", turn.assistant_text},
                 {"domain", turn.domain},
                 {"ts", turn.timestamp}};
        std::lock_guard lk(log_mu_);
        std::ofstream out(*persist_path_, std::ios::app | std::ios::binary);
        if (!out) throw IoError("cannot append to session log " + persist_path_->string());
        out << rec.dump() << '\n';
    }
    memory.append(std::move(turn));
}

std::size_t SessionStore::session_length(const std::string& session_id) {
    return with_session(session_id, [](ConversationMemory& m) { return m.size(); });
}

void SessionStore::clear_session(const std::string& session_id) {
    with_session(session_id, [](ConversationMemory& m) { m.clear(); });
}

std::vector<std::string> SessionStore::session_ids() const {
    std::lock_guard lk(map_mu_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) ids.push_back(id);
    return ids;
}

void SessionStore::replay() {
    if (!persist_path_ || !std::filesystem::exists(*persist_path_)) return;
    std::ifstream in(*persist_path_, std::ios::binary);
    if (!in) throw IoError("cannot read session log " + persist_path_->string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw ParseError("session log line " + std::to_string(lineno) + " is not JSON");
        }
        try {
            Turn t{rec.at("user_text").get<std::string>(),
                   rec.at("assistant_text").get<std::string>(),
                   rec.at("domain").get<std::string>(), rec.at("ts").get<double>()};
            with_session(rec.at("session_id").get<std::string>(),
                         [&](ConversationMemory& m) { m.append(std::move(t)); });
        } catch (const json::exception& e) {
            throw ParseError("session log line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

} // namespace switchboard
