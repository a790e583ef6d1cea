#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace switchboard {

// One domain expert: a LoRA adapter addressed on the wire by `model_id`.
struct AdapterCard {
    std::string name;
    std::string description;
    std::string system_prompt;
    std::vector<std::string> keywords; // case-folded on load
    std::vector<std::string> aliases;
    std::string model_id;
    bool is_fallback = false;

    bool operator==(const AdapterCard&) const = default;
};

// Immutable, validated catalog of adapter cards in file order.
class Registry {
public:
    // Validates every card invariant; throws ValidationError naming the first
    // violation.
    explicit Registry(std::vector<AdapterCard> cards, std::string source_path = {});

    const std::vector<AdapterCard>& cards() const { return cards_; }
    const std::string& source_path() const { return source_path_; }
    std::size_t size() const { return cards_.size(); }

    const AdapterCard& fallback() const { return cards_[fallback_index_]; }
    std::size_t fallback_index() const { return fallback_index_; }

    // Case-insensitive lookup over names and aliases.
    const AdapterCard* find(std::string_view label) const;
    std::optional<std::size_t> index_of(std::string_view label) const;

    bool operator==(const Registry& other) const { return cards_ == other.cards_; }

private:
    std::vector<AdapterCard> cards_;
    std::string source_path_;
    std::size_t fallback_index_ = 0;
};

Registry load_registry(const std::filesystem::path& path);
Registry parse_registry(std::string_view json_text, std::string source_path = {});

nlohmann::json to_json(const Registry& registry);
std::string serialize_registry(const Registry& registry);

// Builds the router prompt from the catalog. `previous_user_message`, when
// given, is shown to the router as conversation context.
std::string render_routing_prompt(const Registry& registry, std::string_view query,
                                  std::optional<std::string_view> previous_user_message = {});

} // namespace switchboard
