#pragma once

#include "ttlforge/env/environment.hpp"
#include "ttlforge/util/rng.hpp"
#include "ttlforge/util/text.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <deque>
#include <map>
#include <optional>
#include <set>

namespace ttlforge::env {

struct Cell {
    int x = 0;
    int y = 0;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class ItemKind { key, treasure, door };

struct GridItem {
    std::string name;
    ItemKind kind = ItemKind::treasure;
    std::optional<Cell> at;  // unset: placed from the seed
    double score = 0.0;
    std::string key;  // doors only: name of the key that opens it
};

struct GridRoom {
    std::string name;
    std::string description;
};

/// Layout of a grid world. Coordinates grow east (x) and south (y).
struct GridQuestConfig {
    int width = 1;
    int height = 1;
    Cell start{};
    std::vector<GridItem> items;
    std::vector<Cell> death;
    std::map<Cell, GridRoom> rooms;
    std::string death_message = "You fall into a hidden pit and die.";
    std::uint64_t seed = 0;

    [[nodiscard]] double total_score() const {
        double s = 0.0;
        for (const auto& it : items) s += it.score;
        return s;
    }

    [[nodiscard]] bool in_bounds(Cell c) const noexcept {
        return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
    }

    [[nodiscard]] bool is_death(Cell c) const {
        return std::find(death.begin(), death.end(), c) != death.end();
    }

    static GridQuestConfig from_json(const Json& j);
    [[nodiscard]] Json to_json() const;

    /// Assigns positions to unplaced items and validates the layout.
    void resolve();
};

namespace detail {

inline Cell cell_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2)
        throw Error(ErrorKind::malformed_config, "gridquest: cells are [x, y] pairs");
    return Cell{j[0].get<int>(), j[1].get<int>()};
}

inline Json cell_to_json(Cell c) { return Json::array({c.x, c.y}); }

inline ItemKind item_kind_from(const std::string& s) {
    if (s == "key") return ItemKind::key;
    if (s == "treasure") return ItemKind::treasure;
    if (s == "door") return ItemKind::door;
    throw Error(ErrorKind::malformed_config, "gridquest: unknown item kind '" + s + "'");
}

inline const char* item_kind_name(ItemKind k) {
    switch (k) {
    case ItemKind::key: return "key";
    case ItemKind::treasure: return "treasure";
    case ItemKind::door: return "door";
    }
    return "?";
}

struct Direction {
    const char* name;
    int dx;
    int dy;
};

inline constexpr std::array<Direction, 4> kDirections{{
    {"north", 0, -1},
    {"south", 0, 1},
    {"east", 1, 0},
    {"west", -1, 0},
}};

inline std::optional<std::size_t> parse_direction(std::string_view w) {
    static const std::map<std::string_view, std::size_t> table{
        {"north", 0}, {"n", 0}, {"south", 1}, {"s", 1}, {"east", 2}, {"e", 2}, {"west", 3}, {"w", 3}};
    if (auto it = table.find(w); it != table.end()) return it->second;
    return std::nullopt;
}

}  // namespace detail

inline GridQuestConfig GridQuestConfig::from_json(const Json& j) {
    try {
        GridQuestConfig c;
        c.width = j.at("width").get<int>();
        c.height = j.at("height").get<int>();
        if (j.contains("start")) c.start = detail::cell_from_json(j.at("start"));
        for (const auto& item : j.value("items", Json::array())) {
            GridItem it;
            it.name = text::normalize_command(item.at("name").get<std::string>());
            it.kind = detail::item_kind_from(item.value("kind", std::string("treasure")));
            if (item.contains("at")) it.at = detail::cell_from_json(item.at("at"));
            it.score = item.value("score", 0.0);
            it.key = text::normalize_command(item.value("key", std::string{}));
            c.items.push_back(std::move(it));
        }
        for (const auto& d : j.value("death", Json::array())) c.death.push_back(detail::cell_from_json(d));
        for (const auto& r : j.value("rooms", Json::array())) {
            c.rooms[detail::cell_from_json(r.at("at"))] =
                GridRoom{r.value("name", std::string{}), r.value("description", std::string{})};
        }
        c.death_message = j.value("death_message", c.death_message);
        c.seed = j.value("seed", std::uint64_t{0});
        c.resolve();
        return c;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::malformed_config, std::string("gridquest config: ") + e.what());
    }
}

inline Json GridQuestConfig::to_json() const {
    Json items_json = Json::array();
    for (const auto& it : items) {
        Json o{{"name", it.name}, {"kind", detail::item_kind_name(it.kind)}, {"score", it.score}};
        if (it.at) o["at"] = detail::cell_to_json(*it.at);
        if (it.kind == ItemKind::door) o["key"] = it.key;
        items_json.push_back(std::move(o));
    }
    Json death_json = Json::array();
    for (auto d : death) death_json.push_back(detail::cell_to_json(d));
    Json rooms_json = Json::array();
    for (const auto& [at, room] : rooms)
        rooms_json.push_back({{"at", detail::cell_to_json(at)}, {"name", room.name}, {"description", room.description}});
    return Json{{"width", width}, {"height", height},         {"start", detail::cell_to_json(start)},
                {"items", items_json}, {"death", death_json}, {"rooms", rooms_json},
                {"death_message", death_message}, {"seed", seed}};
}

inline void GridQuestConfig::resolve() {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::malformed_config, "gridquest: " + m); };
    if (width < 1 || height < 1) bad("grid dimensions must be positive");
    if (!in_bounds(start)) bad("start cell out of bounds");
    if (is_death(start)) bad("start cell is a death tile");
    for (auto d : death)
        if (!in_bounds(d)) bad("death tile out of bounds");

    std::set<std::string> names;
    for (const auto& it : items) {
        if (it.name.empty()) bad("item with empty name");
        if (!names.insert(it.name).second) bad("duplicate item name '" + it.name + "'");
        if (it.score < 0) bad("item '" + it.name + "' has negative score");
        if (it.at && !in_bounds(*it.at)) bad("item '" + it.name + "' out of bounds");
        if (it.at && is_death(*it.at)) bad("item '" + it.name + "' on a death tile");
    }
    for (const auto& it : items) {
        if (it.kind != ItemKind::door) continue;
        auto key = std::find_if(items.begin(), items.end(),
                                [&](const GridItem& k) { return k.kind == ItemKind::key && k.name == it.key; });
        if (key == items.end()) bad("door '" + it.name + "' refers to unknown key '" + it.key + "'");
    }

    // Seeded placement of unplaced items onto free cells, in row-major order.
    Rng rng(seed);
    for (auto& it : items) {
        if (it.at) continue;
        std::vector<Cell> free;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                Cell c{x, y};
                if (c == start || is_death(c)) continue;
                bool taken = std::any_of(items.begin(), items.end(),
                                         [&](const GridItem& o) { return o.at && *o.at == c; });
                if (!taken) free.push_back(c);
            }
        if (free.empty()) bad("no free cell to place item '" + it.name + "'");
        it.at = free[uniform_index(rng, free.size())];
    }
    for (const auto& it : items)
        if (it.kind == ItemKind::door && *it.at == start) bad("door '" + it.name + "' on the start cell");
}

/// Dense-reward grid adventure: keys, locked doors, treasures and pits.
/// Every item scores once; the episode ends when all items are scored or
/// the player dies.
class GridQuest final : public Environment {
public:
    GridQuest(GridQuestConfig config, int horizon)
        : Environment(config.total_score(), horizon), config_(std::move(config)) {
        config_.resolve();
        done_items_.assign(config_.items.size(), false);
    }

    [[nodiscard]] const GridQuestConfig& config() const noexcept { return config_; }

    /// Complete state fingerprint, for exhaustive search in tests.
    [[nodiscard]] std::string state_key() const {
        std::string k = std::to_string(pos_.x) + "," + std::to_string(pos_.y) + (alive_ ? "|" : "|dead|");
        for (bool b : done_items_) k.push_back(b ? '1' : '0');
        return k;
    }

    [[nodiscard]] std::vector<std::string> reference_solution() const override;

private:
    Observation do_reset() override {
        pos_ = config_.start;
        alive_ = true;
        score_ = 0.0;
        done_items_.assign(config_.items.size(), false);
        return Observation{view(), false, 0.0};
    }

    Observation do_step(const std::string& raw) override {
        const std::string cmd = text::normalize_command(raw);
        auto words = text::split(cmd, ' ');
        if (cmd.empty()) return {kNotUnderstood, false, 0.0};

        auto noun_after = [&](std::size_t n) {
            std::vector<std::string> rest(words.begin() + static_cast<std::ptrdiff_t>(n), words.end());
            if (!rest.empty() && rest.front() == "the") rest.erase(rest.begin());
            return text::join(rest, " ");
        };

        if (words.size() == 1) {
            if (auto d = detail::parse_direction(words[0])) return move(*d);
            if (cmd == "look" || cmd == "l") return {view(), false, 0.0};
            if (cmd == "inventory" || cmd == "i" || cmd == "inv") return {inventory(), false, 0.0};
        }
        if (words.size() == 2 && (words[0] == "go" || words[0] == "walk" || words[0] == "move" || words[0] == "run")) {
            if (auto d = detail::parse_direction(words[1])) return move(*d);
        }
        if (cmd == "look around") return {view(), false, 0.0};
        if (words.size() >= 2 && (words[0] == "take" || words[0] == "get" || words[0] == "grab"))
            return take(noun_after(1));
        if (words.size() >= 3 && words[0] == "pick" && words[1] == "up") return take(noun_after(2));
        if (words.size() >= 2 && (words[0] == "open" || words[0] == "unlock")) return open(noun_after(1));
        return {kNotUnderstood, false, 0.0};
    }

    Observation respond(const std::string& message, double reward) {
        score_ += reward;
        return {message + "\n\n" + view(), finished(), reward};
    }

    [[nodiscard]] bool finished() const {
        if (!alive_) return true;
        for (std::size_t i = 0; i < done_items_.size(); ++i)
            if (!done_items_[i] && config_.items[i].score > 0) return false;
        return true;
    }

    [[nodiscard]] const GridItem* locked_door_at(Cell c) const {
        for (std::size_t i = 0; i < config_.items.size(); ++i) {
            const auto& it = config_.items[i];
            if (it.kind == ItemKind::door && !done_items_[i] && *it.at == c) return &it;
        }
        return nullptr;
    }

    [[nodiscard]] bool holds_key(const std::string& name) const {
        for (std::size_t i = 0; i < config_.items.size(); ++i)
            if (config_.items[i].kind == ItemKind::key && config_.items[i].name == name && done_items_[i]) return true;
        return false;
    }

    Observation move(std::size_t dir) {
        const auto& d = detail::kDirections[dir];
        Cell target{pos_.x + d.dx, pos_.y + d.dy};
        if (!config_.in_bounds(target)) return respond("You can't go that way.", 0.0);
        if (const auto* door = locked_door_at(target)) return respond("The " + door->name + " is locked.", 0.0);
        pos_ = target;
        if (config_.is_death(target)) {
            alive_ = false;
            return {config_.death_message, true, 0.0};
        }
        return {view(), finished(), 0.0};
    }

    Observation take(const std::string& noun) {
        for (std::size_t i = 0; i < config_.items.size(); ++i) {
            const auto& it = config_.items[i];
            if (it.name != noun || *it.at != pos_ || done_items_[i]) continue;
            if (it.kind == ItemKind::door) return respond("You can't take that.", 0.0);
            done_items_[i] = true;
            return respond("Taken: " + it.name + ".", it.score);
        }
        return respond("You don't see that here.", 0.0);
    }

    Observation open(const std::string& noun) {
        for (std::size_t i = 0; i < config_.items.size(); ++i) {
            const auto& it = config_.items[i];
            if (it.kind != ItemKind::door || it.name != noun) continue;
            const Cell at = *it.at;
            const bool adjacent = std::abs(at.x - pos_.x) + std::abs(at.y - pos_.y) == 1;
            if (!adjacent) continue;
            if (done_items_[i]) return respond("The " + it.name + " is already open.", 0.0);
            if (!holds_key(it.key)) return respond("You don't have the key for the " + it.name + ".", 0.0);
            done_items_[i] = true;
            return respond("You unlock the " + it.name + ".", it.score);
        }
        return respond("You don't see that here.", 0.0);
    }

    [[nodiscard]] std::string inventory() const {
        std::vector<std::string> held;
        for (std::size_t i = 0; i < config_.items.size(); ++i)
            if (config_.items[i].kind != ItemKind::door && done_items_[i]) held.push_back(config_.items[i].name);
        return held.empty() ? "You are empty-handed." : "You are carrying: " + text::join(held, ", ") + ".";
    }

    [[nodiscard]] std::string view() const {
        std::string out;
        auto room = config_.rooms.find(pos_);
        const std::string name = room != config_.rooms.end() && !room->second.name.empty()
                                     ? room->second.name
                                     : "Room " + std::to_string(pos_.x) + "," + std::to_string(pos_.y);
        const std::string desc = room != config_.rooms.end() && !room->second.description.empty()
                                     ? room->second.description
                                     : "An unremarkable room.";
        out += "Location: " + name + "\n" + desc + "\n";
        for (std::size_t i = 0; i < config_.items.size(); ++i) {
            const auto& it = config_.items[i];
            if (it.kind != ItemKind::door && !done_items_[i] && *it.at == pos_)
                out += "There is a " + it.name + " here.\n";
        }
        std::vector<std::string> exits;
        for (const auto& d : detail::kDirections) {
            Cell c{pos_.x + d.dx, pos_.y + d.dy};
            if (!config_.in_bounds(c)) continue;
            exits.emplace_back(d.name);
            if (const auto* door = locked_door_at(c))
                out += "A locked " + door->name + " lies to the " + d.name + ".\n";
        }
        out += "Exits: " + (exits.empty() ? std::string("none") : text::join(exits, ", ")) + ".\n";
        out += "Score: " + text::shortest(score_) + "/" + text::shortest(max_return());
        return out;
    }

    GridQuestConfig config_;
    Cell pos_{};
    bool alive_ = true;
    double score_ = 0.0;
    std::vector<bool> done_items_;
};

inline std::vector<std::string> GridQuest::reference_solution() const {
    // Greedy planner: repeatedly walk (BFS, avoiding pits and locked doors)
    // to the nearest item that can be scored next, then score it.
    GridQuest sim(config_, 1 << 20);
    sim.reset();
    std::vector<std::string> script;
    auto run = [&](const std::string& cmd) {
        script.push_back(cmd);
        return sim.step(cmd);
    };
    while (!sim.done()) {
        std::map<Cell, std::pair<Cell, std::size_t>> parent;  // cell -> (prev, dir)
        std::map<Cell, int> dist{{sim.pos_, 0}};
        std::deque<Cell> queue{sim.pos_};
        while (!queue.empty()) {
            Cell c = queue.front();
            queue.pop_front();
            for (std::size_t d = 0; d < detail::kDirections.size(); ++d) {
                Cell n{c.x + detail::kDirections[d].dx, c.y + detail::kDirections[d].dy};
                if (!config_.in_bounds(n) || config_.is_death(n) || sim.locked_door_at(n) || dist.count(n)) continue;
                dist[n] = dist[c] + 1;
                parent[n] = {c, d};
                queue.push_back(n);
            }
        }
        std::optional<std::pair<int, std::size_t>> best;  // (distance, item index)
        Cell goal{};
        for (std::size_t i = 0; i < config_.items.size(); ++i) {
            if (sim.done_items_[i]) continue;
            const auto& it = config_.items[i];
            if (it.kind != ItemKind::door) {
                if (auto f = dist.find(*it.at); f != dist.end() && (!best || f->second < best->first)) {
                    best = {f->second, i};
                    goal = *it.at;
                }
                continue;
            }
            if (!sim.holds_key(it.key)) continue;
            for (const auto& d : detail::kDirections) {
                Cell n{it.at->x - d.dx, it.at->y - d.dy};
                if (auto f = dist.find(n); f != dist.end() && (!best || f->second < best->first)) {
                    best = {f->second, i};
                    goal = n;
                }
            }
        }
        if (!best) break;
        std::vector<std::string> path;
        for (Cell c = goal; c != sim.pos_;) {
            auto [prev, d] = parent.at(c);
            path.push_back(std::string("go ") + detail::kDirections[d].name);
            c = prev;
        }
        std::reverse(path.begin(), path.end());
        for (const auto& p : path) run(p);
        const auto& item = config_.items[best->second];
        run((item.kind == ItemKind::door ? "open " : "take ") + item.name);
    }
    return script;
}

}  // namespace ttlforge::env
