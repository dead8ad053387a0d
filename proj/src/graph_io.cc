#include "bellqma/graph_io.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bellqma {

namespace {

using nlohmann::json;

int require_int(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
    const json& value = obj.at(key);
    if (!value.is_number_integer()) throw ParseError(where + ": field '" + key + "' must be an integer");
    return value.get<int>();
}

Relation parse_relation(const json& rows, int K, std::size_t edge) {
    const std::string where = "edge " + std::to_string(edge);
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(K)) {
        throw ParseError(where + ": relation must be a " + std::to_string(K) + "x" + std::to_string(K) + " matrix");
    }
    std::vector<std::uint8_t> table;
    table.reserve(static_cast<std::size_t>(K * K));
    for (const json& row : rows) {
        if (!row.is_array() || row.size() != static_cast<std::size_t>(K)) {
            throw ParseError(where + ": relation must be a " + std::to_string(K) + "x" + std::to_string(K) + " matrix");
        }
        for (const json& entry : row) {
            if (!entry.is_number_integer() || (entry.get<int>() != 0 && entry.get<int>() != 1)) {
                throw ParseError(where + ": relation entries must be 0 or 1");
            }
            table.push_back(static_cast<std::uint8_t>(entry.get<int>()));
        }
    }
    return Relation(K, std::move(table));
}

}  // namespace

InstanceFile parse_instance(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("instance must be a JSON object");

    InstanceFile out;
    ConstraintGraph& g = out.graph;
    g.n = require_int(doc, "n", "instance");
    g.K = require_int(doc, "K", "instance");
    if (g.K < 1) throw ParseError("instance: K must be positive");
    if (doc.contains("d") && !doc.at("d").is_null()) g.degree = require_int(doc, "d", "instance");

    if (!doc.contains("edges") || !doc.at("edges").is_array()) throw ParseError("instance: 'edges' must be a list");
    const json& edges = doc.at("edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const json& e = edges[i];
        const std::string where = "edge " + std::to_string(i);
        if (!e.is_object()) throw ParseError(where + ": must be an object");
        if (!e.contains("relation")) throw ParseError(where + ": missing field 'relation'");
        g.edges.push_back({require_int(e, "u", where), require_int(e, "v", where), parse_relation(e.at("relation"), g.K, i)});
    }

    if (doc.contains("colorings")) {
        const json& named = doc.at("colorings");
        if (!named.is_object()) throw ParseError("instance: 'colorings' must be an object");
        for (const auto& [name, value] : named.items()) {
            if (!value.is_array()) throw ParseError("coloring '" + name + "' must be a list");
            Coloring c;
            for (const json& x : value) {
                if (!x.is_number_integer()) throw ParseError("coloring '" + name + "' entries must be integers");
                c.push_back(x.get<int>());
            }
            out.colorings.emplace(name, std::move(c));
        }
    }
    return out;
}

InstanceFile read_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_instance(buffer.str());
}

std::string format_instance(const InstanceFile& instance) {
    const ConstraintGraph& g = instance.graph;
    std::ostringstream out;
    out << "{\n  \"n\": " << g.n << ",\n  \"K\": " << g.K << ",\n";
    if (g.degree) out << "  \"d\": " << *g.degree << ",\n";
    out << "  \"edges\": [";
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const Edge& e = g.edges[i];
        out << (i == 0 ? "\n" : ",\n") << "    {\"u\": " << e.u << ", \"v\": " << e.v << ", \"relation\": [";
        for (int a = 0; a < e.relation.colors(); ++a) {
            out << (a == 0 ? "[" : ", [");
            for (int b = 0; b < e.relation.colors(); ++b) out << (b == 0 ? "" : ", ") << int{e.relation.allows(a, b)};
            out << "]";
        }
        out << "]}";
    }
    out << "\n  ]";
    if (!instance.colorings.empty()) {
        out << ",\n  \"colorings\": {";
        bool first = true;
        for (const auto& [name, coloring] : instance.colorings) {
            out << (first ? "\n" : ",\n") << "    " << json(name).dump() << ": [";
            for (std::size_t v = 0; v < coloring.size(); ++v) out << (v == 0 ? "" : ", ") << coloring[v];
            out << "]";
            first = false;
        }
        out << "\n  }";
    }
    out << "\n}\n";
    return out.str();
}

void write_instance(const std::filesystem::path& path, const InstanceFile& instance) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << format_instance(instance);
}

}  // namespace bellqma
