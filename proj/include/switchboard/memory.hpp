#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "switchboard/backend.hpp"

namespace switchboard {

struct Turn {
    std::string user_text;
    std::string assistant_text;
    std::string domain;
    double timestamp = 0.0; // seconds on the session's clock

    bool operator==(const Turn&) const = default;
};

// Bounded, chronologically ordered conversation history. Appending past the
// cap drops the oldest turns.
class ConversationMemory {
public:
    static constexpr std::size_t kDefaultCap = 10;

    explicit ConversationMemory(std::string session_id, std::size_t cap = kDefaultCap);

    const std::string& session_id() const { return session_id_; }
    std::size_t cap() const { return cap_; }
    std::size_t size() const { return turns_.size(); }
    bool empty() const { return turns_.empty(); }
    const std::deque<Turn>& turns() const { return turns_; }

    // Throws ValidationError for empty texts or an out-of-order timestamp.
    void append(Turn turn);
    void clear() { turns_.clear(); }

    // user, assistant, user, assistant, ... oldest first.
    std::vector<ChatMessage> render() const;

private:
    std::string session_id_;
    std::size_t cap_;
    std::deque<Turn> turns_;
};

// In-process sessions keyed by id. Access to one session is exclusive; distinct
// sessions never contend beyond the map lookup. With a persist path every
// committed turn is appended to a newline-delimited JSON log.
class SessionStore {
public:
    explicit SessionStore(std::size_t cap = ConversationMemory::kDefaultCap,
                          std::optional<std::filesystem::path> persist_path = std::nullopt);

    std::size_t cap() const { return cap_; }

    // Runs `fn` with the session locked, creating the session if needed.
    template <typename Fn>
    decltype(auto) with_session(const std::string& session_id, Fn&& fn) {
        auto slot = slot_for(session_id);
        std::lock_guard lk(slot->mu);
        return std::forward<Fn>(fn)(slot->memory);
    }

    // Appends to memory and to the persistence log.
    void commit(ConversationMemory& memory, Turn turn);

    std::size_t session_length(const std::string& session_id);
    void clear_session(const std::string& session_id);
    std::vector<std::string> session_ids() const;

    // Rebuilds sessions from the persistence log (last `cap` turns each).
    void replay();

private:
    struct Slot {
        std::mutex mu;
        ConversationMemory memory;
        explicit Slot(const std::string& id, std::size_t cap) : memory(id, cap) {}
    };

    std::shared_ptr<Slot> slot_for(const std::string& session_id);

    std::size_t cap_;
    std::optional<std::filesystem::path> persist_path_;
    mutable std::mutex map_mu_;
    std::mutex log_mu_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

} // namespace switchboard
