#include "obl/config_io.hpp"

#include <sstream>

#include "json.hpp"
#include "obl/io_util.hpp"

namespace obl {

using nlohmann::json;

ObstacleConfiguration<double> parse_configuration(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw InvalidConfiguration(std::string("configuration is not valid JSON: ") + e.what());
    }
    if (j.value("dimension", 2) != 2)
        throw InvalidConfiguration("only dimension 2 is supported");
    if (!j.contains("obstacles") || !j["obstacles"].is_array())
        throw InvalidConfiguration("configuration needs an obstacles array");
    std::vector<ConvexObstacle<double>> obs;
    for (const auto& o : j["obstacles"]) {
        const std::string kind = o.value("kind", "disc");
        if (!o.contains("center") || o["center"].size() != 2)
            throw InvalidConfiguration("obstacle needs a 2d center");
        Vec2<double> c(o["center"][0].get<double>(), o["center"][1].get<double>());
        if (kind == "disc") {
            if (!o.contains("radius")) throw InvalidConfiguration("disc needs a radius");
            obs.push_back(ConvexObstacle<double>::disc(c, o["radius"].get<double>()));
        } else if (kind == "ellipse") {
            if (!o.contains("semi_axes") || o["semi_axes"].size() != 2)
                throw InvalidConfiguration("ellipse needs semi_axes [a,b]");
            obs.push_back(ConvexObstacle<double>::ellipse(c, o["semi_axes"][0].get<double>(),
                                                          o["semi_axes"][1].get<double>(),
                                                          o.value("angle", 0.0)));
        } else {
            throw InvalidConfiguration("unknown obstacle kind: " + kind);
        }
    }
    return ObstacleConfiguration<double>(std::move(obs));
}

ObstacleConfiguration<double> load_configuration(const std::string& path) {
    return parse_configuration(read_text_file(path));
}

std::string configuration_to_json(const ObstacleConfiguration<double>& cfg) {
    json j;
    j["dimension"] = 2;
    json arr = json::array();
    for (const auto& K : cfg.obstacles()) {
        json o;
        if (K.kind == ObstacleKind::Disc) {
            o["kind"] = "disc";
            o["center"] = {K.center.x(), K.center.y()};
            o["radius"] = K.radius;
        } else {
            o["kind"] = "ellipse";
            o["center"] = {K.center.x(), K.center.y()};
            o["semi_axes"] = {K.a, K.b};
            o["angle"] = K.angle;
        }
        arr.push_back(o);
    }
    j["obstacles"] = arr;
    j["d0"] = cfg.min_separation();
    j["no_eclipse"] = cfg.no_eclipse().ok;
    return j.dump(2) + "\n";
}

std::string word_to_string(const SymbolWord& w) {
    std::ostringstream ss;
    for (size_t i = 0; i < w.size(); ++i) ss << (i ? "," : "") << w[i];
    return ss.str();
}

SymbolWord parse_word(const std::string& text) {
    SymbolWord w;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        w.push_back(std::stoi(item));
    }
    if (w.empty()) throw NonAdmissibleWord("empty word");
    return w;
}

Potential load_potential(const std::string& path) {
    json j = json::parse(read_text_file(path));
    Potential pot;
    pot.k0 = j.at("k0").get<int>();
    pot.memory = j.at("memory").get<int>();
    pot.provenance = j.value("provenance", "explicit");
    WordIndexer ix(pot.k0, pot.memory + 1);
    pot.table.assign(ix.count(), 0.0);
    for (const auto& [key, val] : j.at("table").items()) {
        SymbolWord w = parse_word(key);
        if (static_cast<int>(w.size()) != pot.memory + 1)
            throw InvalidConfiguration("potential table key has wrong length: " + key);
        pot.table[ix.encode(w)] = val.get<double>();
    }
    return pot;
}

std::string potential_to_json(const Potential& pot) {
    json j;
    j["k0"] = pot.k0;
    j["memory"] = pot.memory;
    j["provenance"] = pot.provenance;
    WordIndexer ix(pot.k0, pot.memory + 1);
    json table = json::object();
    for (size_t i = 0; i < ix.count(); ++i)
        table[word_to_string(ix.decode(i))] = pot.table[i];
    j["table"] = table;
    if (!pot.var_profile.empty()) j["var_profile"] = pot.var_profile;
    return j.dump(2) + "\n";
}

}  // namespace obl
