#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "bellqma/constraint_graph.h"

namespace bellqma {

/// Instance file contents: the graph plus any named colorings shipped with it
/// (generators store their planted coloring under "planted").
struct InstanceFile {
    ConstraintGraph graph;
    std::map<std::string, Coloring> colorings;
};

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// JSON layout:
///   {"n": 5, "K": 2, "d": 2,
///    "edges": [{"u": 0, "v": 1, "relation": [[0, 1], [1, 0]]}, ...],
///    "colorings": {"planted": [0, 1, ...]}}
/// "d" and "colorings" are optional. Structural problems (missing fields,
/// ragged relation tables) throw ParseError naming the offending edge; graph
/// invariants such as endpoint ranges are left to validate().
InstanceFile parse_instance(std::string_view text);
InstanceFile read_instance(const std::filesystem::path& path);

std::string format_instance(const InstanceFile& instance);
void write_instance(const std::filesystem::path& path, const InstanceFile& instance);

}  // namespace bellqma
