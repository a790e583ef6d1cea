#include "switchboard/registry.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "switchboard/errors.hpp"
#include "switchboard/text.hpp"

namespace switchboard {

using nlohmann::json;

Registry::Registry(std::vector<AdapterCard> cards, std::string source_path)
    : cards_(std::move(cards)), source_path_(std::move(source_path)) {
    if (cards_.size() < 2) {
        throw ValidationError("registry needs at least 2 adapters, got " +
                              std::to_string(cards_.size()));
    }

    std::size_t fallbacks = 0;
    for (std::size_t i = 0; i < cards_.size(); ++i) {
        auto& card = cards_[i];
        if (text::trim(card.name).empty()) {
            throw ValidationError("adapter #" + std::to_string(i) + " has an empty name");
        }
        if (card.model_id.empty()) {
            throw ValidationError("adapter '" + card.name + "' has an empty model_id");
        }
        for (auto& kw : card.keywords) {
            if (text::trim(kw).empty()) {
                throw ValidationError("adapter '" + card.name + "' has an empty keyword");
            }
            kw = text::fold(kw);
        }
        for (const auto& alias : card.aliases) {
            if (text::trim(alias).empty()) {
                throw ValidationError("adapter '" + card.name + "' has an empty alias");
            }
        }
        if (card.is_fallback) {
            ++fallbacks;
            fallback_index_ = i;
        }
    }
    if (fallbacks != 1) {
        throw ValidationError("registry needs exactly one fallback adapter, got " +
                              std::to_string(fallbacks));
    }

    // Every label (name or alias) must identify one card after case-folding.
    std::vector<std::pair<std::string, std::size_t>> labels;
    for (std::size_t i = 0; i < cards_.size(); ++i) {
        labels.emplace_back(text::fold(cards_[i].name), i);
        for (const auto& alias : cards_[i].aliases) labels.emplace_back(text::fold(alias), i);
    }
    for (std::size_t a = 0; a < labels.size(); ++a) {
        for (std::size_t b = a + 1; b < labels.size(); ++b) {
            if (labels[a].first != labels[b].first) continue;
            if (labels[a].second == labels[b].second) continue;
            throw ValidationError("label '" + labels[b].first + "' of adapter '" +
                                  cards_[labels[b].second].name + "' collides with adapter '" +
                                  cards_[labels[a].second].name + "'");
        }
    }
}

std::optional<std::size_t> Registry::index_of(std::string_view label) const {
    const auto folded = text::fold(text::trim(label));
    for (std::size_t i = 0; i < cards_.size(); ++i) {
        if (text::fold(cards_[i].name) == folded) return i;
        for (const auto& alias : cards_[i].aliases) {
            if (text::fold(alias) == folded) return i;
        }
    }
    return std::nullopt;
}

const AdapterCard* Registry::find(std::string_view label) const {
    const auto idx = index_of(label);
    return idx ? &cards_[*idx] : nullptr;
}

namespace {

const std::set<std::string>& card_keys() {
    static const std::set<std::string> keys{"name",    "description", "system_prompt",
                                            "keywords", "aliases",     "model_id",
                                            "is_fallback"};
    return keys;
}

template <typename T>
T required(const json& obj, const char* key, std::size_t index) {
    if (!obj.contains(key)) {
        throw ParseError("adapter #" + std::to_string(index) + ": missing key '" + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError("adapter #" + std::to_string(index) + ": key '" + key +
                         "' has the wrong type");
    }
}

AdapterCard parse_card(const json& obj, std::size_t index) {
    if (!obj.is_object()) {
        throw ParseError("adapter #" + std::to_string(index) + " is not an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (!card_keys().count(key)) {
            throw ParseError("adapter #" + std::to_string(index) + ": unknown key '" + key + "'");
        }
    }
    AdapterCard card;
    card.name = required<std::string>(obj, "name", index);
    card.description = required<std::string>(obj, "description", index);
    card.system_prompt = required<std::string>(obj, "system_prompt", index);
    card.keywords = required<std::vector<std::string>>(obj, "keywords", index);
    card.aliases = required<std::vector<std::string>>(obj, "aliases", index);
    card.model_id = required<std::string>(obj, "model_id", index);
    card.is_fallback = required<bool>(obj, "is_fallback", index);
    return card;
}

} // namespace

Registry parse_registry(std::string_view json_text, std::string source_path) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("adapter config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("adapter config must be a JSON object");
    for (const auto& [key, _] : doc.items()) {
        if (key != "adapters") throw ParseError("unknown top-level key '" + key + "'");
    }
    if (!doc.contains("adapters") || !doc["adapters"].is_array()) {
        throw ParseError("adapter config needs an 'adapters' array");
    }
    std::vector<AdapterCard> cards;
    const auto& arr = doc["adapters"];
    for (std::size_t i = 0; i < arr.size(); ++i) cards.push_back(parse_card(arr[i], i));
    return Registry(std::move(cards), std::move(source_path));
}

Registry load_registry(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open adapter config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_registry(ss.str(), path.string());
}

json to_json(const Registry& registry) {
    json adapters = json::array();
    for (const auto& c : registry.cards()) {
        adapters.push_back({{"name", c.name},
                            {"description", c.description},
                            {"system_prompt", c.system_prompt},
                            {"keywords", c.keywords},
                            {"aliases", c.aliases},
                            {"model_id", c.model_id},
                            {"is_fallback", c.is_fallback}});
    }
    return json{{"adapters", std::move(adapters)}};
}

std::string serialize_registry(const Registry& registry) {
    return to_json(registry).dump(2) + "\n";
}

std::string render_routing_prompt(const Registry& registry, std::string_view query,
                                  std::optional<std::string_view> previous_user_message) {
    if (text::trim(query).empty()) throw EmptyQuery();

    std::string out;
    out += "Analyze this user query and select the most appropriate domain expert to handle it.\n\n";
    if (previous_user_message && !text::trim(*previous_user_message).empty()) {
        out += "Previous user message: \"";
        out += *previous_user_message;
        out += "\"\n\n";
    }
    out += "Query: \"";
    out += query;
    out += "\"\n\nAvailable Domain Experts:\n";
    for (const auto& card : registry.cards()) {
        out += "- " + card.name + " - " + card.description + "\n";
    }
    out += "\nInstructions:\n"
           "- Analyze the query carefully\n"
           "- Consider the main topic and intent\n"
           "- Choose the domain expert that best matches the query\n"
           "- If unsure or the query is general/casual, choose " +
           registry.fallback().name +
           "\n"
           "- Respond with ONLY the domain name\n";
    return out;
}

} // namespace switchboard
